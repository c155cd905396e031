#include <algorithm>

#include "vdn/gridworld/gridworld.hpp"

namespace vdn::grid {

std::string_view action_name(Action action) {
  switch (action) {
    case Action::Forward: return "forward";
    case Action::Backward: return "backward";
    case Action::StepLeft: return "step_left";
    case Action::StepRight: return "step_right";
    case Action::RotateLeft: return "rotate_left";
    case Action::RotateRight: return "rotate_right";
    case Action::UseBeam: return "use_beam";
    case Action::Stand: return "stand";
  }
  return "?";
}

std::string_view event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::Goal: return "goal";
    case EventKind::Pickup: return "pickup";
    case EventKind::Dropoff: return "dropoff";
    case EventKind::Apple: return "apple";
    case EventKind::Lemon: return "lemon";
  }
  return "?";
}

Coord forward_vector(Orientation o) {
  switch (o) {
    case Orientation::North: return {0, -1};
    case Orientation::East: return {1, 0};
    case Orientation::South: return {0, 1};
    case Orientation::West: return {-1, 0};
  }
  return {0, 0};
}

Coord right_vector(Orientation o) {
  const Coord f = forward_vector(o);
  return {-f.y, f.x};
}

Orientation rotate_left(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 3) % 4);
}

Orientation rotate_right(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

int EnvState::remaining_apples() const {
  return static_cast<int>(std::count(items.begin(), items.end(), Item::Apple));
}

int EnvState::remaining_lemons() const {
  return static_cast<int>(std::count(items.begin(), items.end(), Item::Lemon));
}

bool EnvState::operator==(const EnvState& other) const {
  if (poses.size() != other.poses.size()) return false;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& a = poses[i];
    const auto& b = other.poses[i];
    if (a.position != b.position || a.orientation != b.orientation ||
        a.carrying != b.carrying || a.reached_goal != b.reached_goal) {
      return false;
    }
  }
  return map == other.map && pickup_available == other.pickup_available &&
         items == other.items && beams == other.beams &&
         apples_collected == other.apples_collected &&
         lemons_collected == other.lemons_collected && step == other.step &&
         episode_limit == other.episode_limit && task_resets == other.task_resets &&
         rng == other.rng;
}

namespace {

Coord add(Coord a, Coord b) { return {a.x + b.x, a.y + b.y}; }
Coord scale(Coord a, int k) { return {a.x * k, a.y * k}; }

void place_agents(EnvState& s) {
  const GridMap& map = *s.map;
  s.poses.assign(static_cast<std::size_t>(map.num_agents()), AgentPose{});
  for (int a = 0; a < map.num_agents(); ++a) {
    const auto& options = map.spawns[static_cast<std::size_t>(a)];
    // Another agent's chosen spawn is skipped; maps normally keep spawn lists disjoint.
    std::vector<Coord> free;
    for (const auto& c : options) {
      bool taken = false;
      for (int b = 0; b < a; ++b) taken |= s.poses[static_cast<std::size_t>(b)].position == c;
      if (!taken) free.push_back(c);
    }
    if (free.empty()) throw ConfigError("no free spawn cell for agent " + std::to_string(a + 1));
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    std::uniform_int_distribution<int> turn(0, 3);
    auto& pose = s.poses[static_cast<std::size_t>(a)];
    pose.position = free[pick(s.rng)];
    pose.orientation = static_cast<Orientation>(turn(s.rng));
  }
}

void restore_task(EnvState& s) {
  const GridMap& map = *s.map;
  place_agents(s);
  s.pickup_available = true;
  s.items.assign(map.cells.size(), Item::None);
  for (const auto& c : map.apples) s.items[map.index(c)] = Item::Apple;
  for (const auto& c : map.lemons) s.items[map.index(c)] = Item::Lemon;
  s.apples_collected = 0;
  s.lemons_collected = 0;
}

std::vector<Observation> render_all(const EnvState& s) {
  std::vector<Observation> obs;
  obs.reserve(s.poses.size());
  for (int a = 0; a < static_cast<int>(s.poses.size()); ++a) obs.push_back(render_observation(s, a));
  return obs;
}

void emit(StepResult& r, int agent, EventKind kind, double amount) {
  r.events.push_back({agent, kind, amount});
  r.team_reward += amount;
}

}  // namespace

ResetResult reset(std::shared_ptr<const GridMap> map, std::uint64_t seed, Mode mode,
                  int episode_limit) {
  if (!map) throw UsageError("reset called without a map");
  ResetResult r;
  EnvState& s = r.state;
  s.map = std::move(map);
  s.rng.seed(seed);
  s.episode_limit = episode_limit > 0 ? episode_limit
                    : mode == Mode::Train ? kTrainEpisodeLimit
                                          : kTestEpisodeLimit;
  s.beams.assign(s.map->cells.size(), 0);
  restore_task(s);
  r.observations = render_all(s);
  return r;
}

std::vector<Coord> resolve_moves(EnvState& state, std::span<const Coord> targets) {
  const GridMap& map = *state.map;
  const std::size_t n = state.poses.size();
  std::vector<Coord> from(n);
  std::vector<Coord> to(n);
  for (std::size_t i = 0; i < n; ++i) {
    from[i] = state.poses[i].position;
    to[i] = targets[i];
    if (!map.in_bounds(to[i]) || map.is_wall(to[i])) to[i] = from[i];
  }

  // Same-target conflicts among movers: one winner, the rest stay.
  for (std::size_t i = 0; i < n; ++i) {
    if (to[i] == from[i]) continue;
    std::vector<std::size_t> claimants{i};
    for (std::size_t j = i + 1; j < n; ++j) {
      if (to[j] != from[j] && to[j] == to[i]) claimants.push_back(j);
    }
    if (claimants.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> coin(0, claimants.size() - 1);
    const std::size_t winner = claimants[coin(state.rng)];
    for (const std::size_t c : claimants) {
      if (c != winner) to[c] = from[c];
    }
  }

  // Swaps: both stay.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (to[i] != from[i] && to[j] != from[j] && to[i] == from[j] && to[j] == from[i]) {
        to[i] = from[i];
        to[j] = from[j];
      }
    }
  }

  // Anyone moving into a cell that ends up occupied stays; repeat to a fixed point.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (to[i] == from[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && to[j] == to[i]) {
          to[i] = from[i];
          changed = true;
          break;
        }
      }
    }
  }
  return to;
}

StepResult step(EnvState& s, std::span<const Action> actions) {
  if (s.done()) {
    throw UsageError("step called after the episode finished (step " + std::to_string(s.step) +
                     " of " + std::to_string(s.episode_limit) + ")");
  }
  const GridMap& map = *s.map;
  const std::size_t n = s.poses.size();
  if (actions.size() != n) {
    throw UsageError("expected " + std::to_string(n) + " actions, got " +
                     std::to_string(actions.size()));
  }
  std::fill(s.beams.begin(), s.beams.end(), 0);

  std::vector<Coord> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pose = s.poses[i];
    targets[i] = pose.position;
    if (map.task == Task::Switch && pose.reached_goal) continue;
    const Coord f = forward_vector(pose.orientation);
    const Coord r = right_vector(pose.orientation);
    switch (actions[i]) {
      case Action::Forward: targets[i] = add(pose.position, f); break;
      case Action::Backward: targets[i] = add(pose.position, scale(f, -1)); break;
      case Action::StepLeft: targets[i] = add(pose.position, scale(r, -1)); break;
      case Action::StepRight: targets[i] = add(pose.position, r); break;
      default: break;
    }
  }
  const auto finals = resolve_moves(s, targets);

  for (std::size_t i = 0; i < n; ++i) {
    auto& pose = s.poses[i];
    pose.position = finals[i];
    const bool frozen = map.task == Task::Switch && pose.reached_goal;
    if (frozen) continue;
    if (actions[i] == Action::RotateLeft) pose.orientation = rotate_left(pose.orientation);
    if (actions[i] == Action::RotateRight) pose.orientation = rotate_right(pose.orientation);
    if (actions[i] == Action::UseBeam) {
      const Coord f = forward_vector(pose.orientation);
      for (Coord c = add(pose.position, f); map.in_bounds(c) && !map.is_wall(c); c = add(c, f)) {
        s.beams[map.index(c)] = 1;
      }
    }
  }

  StepResult result;
  bool task_reset = false;
  switch (map.task) {
    case Task::Switch: {
      for (std::size_t i = 0; i < n; ++i) {
        auto& pose = s.poses[i];
        if (!pose.reached_goal && pose.position == map.goals[i]) {
          pose.reached_goal = true;
          emit(result, static_cast<int>(i), EventKind::Goal, kSwitchGoalReward);
        }
      }
      task_reset = std::all_of(s.poses.begin(), s.poses.end(),
                               [](const AgentPose& p) { return p.reached_goal; });
      break;
    }
    case Task::Fetch: {
      // Availability is read at the start of the step: a drop-off re-arms the
      // pickup for the next step, independent of agent order.
      const bool armed = s.pickup_available;
      for (std::size_t i = 0; i < n; ++i) {
        auto& pose = s.poses[i];
        if (pose.carrying && pose.position == *map.dropoff) {
          pose.carrying = false;
          s.pickup_available = true;
          emit(result, static_cast<int>(i), EventKind::Dropoff, kFetchDropoffReward);
        } else if (armed && !pose.carrying && pose.position == *map.pickup) {
          pose.carrying = true;
          s.pickup_available = false;
          emit(result, static_cast<int>(i), EventKind::Pickup, kFetchPickupReward);
        }
      }
      break;
    }
    case Task::Checkers: {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cell = map.index(s.poses[i].position);
        const std::size_t role = std::min<std::size_t>(i, 1);
        if (s.items[cell] == Item::Apple) {
          s.items[cell] = Item::None;
          ++s.apples_collected;
          emit(result, static_cast<int>(i), EventKind::Apple, kCheckersAppleReward[role]);
        } else if (s.items[cell] == Item::Lemon) {
          s.items[cell] = Item::None;
          ++s.lemons_collected;
          emit(result, static_cast<int>(i), EventKind::Lemon, kCheckersLemonReward[role]);
        }
      }
      task_reset = s.remaining_apples() == 0;
      break;
    }
  }
  if (task_reset) {
    restore_task(s);
    ++s.task_resets;
  }

  ++s.step;
  result.done = s.done();
  result.observations = render_all(s);
  return result;
}

Observation render_observation(const EnvState& s, int agent) {
  const GridMap& map = *s.map;
  const auto& self = s.poses.at(static_cast<std::size_t>(agent));
  const Coord f = forward_vector(self.orientation);
  const Coord r = right_vector(self.orientation);
  const Rgb teammate =
      map.task == Task::Fetch ? palette::kTeammateLightBlue : palette::kTeammateRed;

  Observation obs;
  auto paint = [&](int row, int col, const Rgb& rgb) {
    for (int ch = 0; ch < kObsChannels; ++ch) {
      obs.data[static_cast<std::size_t>(ch * kObsRows * kObsCols + row * kObsCols + col)] =
          rgb[static_cast<std::size_t>(ch)];
    }
  };

  for (int row = 0; row < kObsRows; ++row) {
    const int depth = kObsRows - 1 - row;
    for (int col = 0; col < kObsCols; ++col) {
      const int lateral = col - kObsCols / 2;
      const Coord c = add(self.position, add(scale(f, depth), scale(r, lateral)));
      Rgb color = palette::kOffMap;
      if (map.in_bounds(c)) {
        const std::size_t idx = map.index(c);
        if (map.is_wall(c)) {
          color = palette::kWall;
        } else {
          color = palette::kFloor;
          switch (map.task) {
            case Task::Switch:
              if (c == map.goals[static_cast<std::size_t>(agent)]) color = palette::kGoal;
              break;
            case Task::Fetch:
              if (c == *map.dropoff) color = palette::kDropoff;
              if (c == *map.pickup && s.pickup_available) color = palette::kPickup;
              break;
            case Task::Checkers:
              if (s.items[idx] == Item::Apple) color = palette::kApple;
              if (s.items[idx] == Item::Lemon) color = palette::kLemon;
              break;
          }
          if (s.beams[idx]) color = palette::kBeam;
        }
        for (std::size_t other = 0; other < s.poses.size(); ++other) {
          if (static_cast<int>(other) != agent && s.poses[other].position == c) color = teammate;
        }
        if (c == self.position) color = palette::kSelf;
      }
      paint(row, col, color);
    }
  }
  return obs;
}

}  // namespace vdn::grid
