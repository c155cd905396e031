#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "vdn/gridworld/gridworld.hpp"

using namespace vdn;
using namespace vdn::grid;

namespace {

const std::vector<std::string> kShippedMaps{"switch_open",     "switch_1corridor",
                                            "switch_2corridor", "fetch_open",
                                            "fetch_1corridor",  "fetch_2corridor",
                                            "checkers"};

std::shared_ptr<const GridMap> shipped(const std::string& name) {
  return std::make_shared<const GridMap>(
      load_map_file(std::filesystem::path(VDN_TEST_MAPS_DIR) / (name + ".txt")));
}

std::shared_ptr<const GridMap> parse(const std::string& text) {
  return std::make_shared<const GridMap>(load_map(text, "test"));
}

// Reset and then place both agents by hand.
EnvState place(std::shared_ptr<const GridMap> map, Coord a1, Orientation o1, Coord a2,
               Orientation o2, std::uint64_t seed = 1) {
  auto s = reset(std::move(map), seed, Mode::Train).state;
  s.poses[0].position = a1;
  s.poses[0].orientation = o1;
  s.poses[1].position = a2;
  s.poses[1].orientation = o2;
  return s;
}

StepResult act(EnvState& s, Action a1, Action a2) {
  const std::array<Action, 2> actions{a1, a2};
  return step(s, actions);
}

Rgb pixel(const Observation& obs, int row, int col) { return obs.pixel(row, col); }

}  // namespace

TEST(LoadMap, SmallSwitchMap) {
  const auto map = load_map("task: switch\n1a.\n...\n2b.\n");
  EXPECT_EQ(map.task, Task::Switch);
  EXPECT_EQ(map.width, 3);
  EXPECT_EQ(map.height, 3);
  ASSERT_EQ(map.spawns.size(), 2u);
  EXPECT_EQ(map.spawns[0], (std::vector<Coord>{{0, 0}}));
  EXPECT_EQ(map.spawns[1], (std::vector<Coord>{{0, 2}}));
  ASSERT_EQ(map.goals.size(), 2u);
  EXPECT_EQ(map.goals[0], (Coord{1, 0}));
  EXPECT_EQ(map.goals[1], (Coord{1, 2}));
  for (const auto c : map.cells) EXPECT_EQ(c, Cell::Floor);
}

TEST(LoadMap, MissingSecondGoal) {
  try {
    load_map("task: switch\n1a.\n...\n2..\n");
    FAIL() << "expected a parse error";
  } catch (const MapParseError& e) {
    EXPECT_NE(std::string(e.what()).find("missing goal for agent 2"), std::string::npos) << e.what();
  }
}

TEST(LoadMap, UnknownGlyphReportsPosition) {
  try {
    load_map("task: fetch\n#####\n#1P2#\n#D.x#\n#####\n");
    FAIL() << "expected a parse error";
  } catch (const MapParseError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_EQ(e.column(), 4);
  }
}

TEST(LoadMap, GlyphFromAnotherTaskRejected) {
  EXPECT_THROW(load_map("task: switch\n1aA\n2b.\n"), MapParseError);
}

TEST(LoadMap, RaggedRowsRejected) {
  try {
    load_map("task: switch\n1a.\n..\n2b.\n");
    FAIL() << "expected a parse error";
  } catch (const MapParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(LoadMap, MissingFetchCells) {
  EXPECT_THROW(load_map("task: fetch\n1.P\n2..\n"), MapParseError);
  EXPECT_THROW(load_map("task: fetch\n1.D\n2..\n"), MapParseError);
}

TEST(LoadMap, CheckersNeedsAnApple) {
  EXPECT_THROW(load_map("task: checkers\n1LL\n2..\n"), MapParseError);
}

TEST(LoadMap, UnknownTaskHeader) {
  EXPECT_THROW(load_map("task: escape\n1.\n2.\n"), MapParseError);
  EXPECT_THROW(load_map("1.\n2.\n"), MapParseError);
}

TEST(ShippedMaps, AllLoadAndRoundTrip) {
  for (const auto& name : kShippedMaps) {
    const auto map = shipped(name);
    const auto again = load_map(format_map(*map), name);
    EXPECT_EQ(format_map(again), format_map(*map)) << name;
    EXPECT_EQ(map_hash(again), map_hash(*map)) << name;
    for (const auto& spawns : map->spawns) {
      for (const auto c : spawns) EXPECT_FALSE(map->is_wall(c)) << name;
    }
  }
}

TEST(ShippedMaps, FetchOpenPickupAndDropoffOnOppositeSides) {
  const auto map = shipped("fetch_open");
  ASSERT_TRUE(map->pickup && map->dropoff);
  EXPECT_EQ(map->dropoff->x, 1);
  EXPECT_EQ(map->pickup->x, map->width - 2);
  EXPECT_EQ(map->pickup->y, map->dropoff->y);
}

TEST(ShippedMaps, CorridorsAreSingleCellWide) {
  // Count the open cells in the partition column of each corridor map.
  const std::map<std::string, int> expected{{"switch_1corridor", 1}, {"switch_2corridor", 2},
                                            {"fetch_1corridor", 1},  {"fetch_2corridor", 2}};
  for (const auto& [name, passages] : expected) {
    const auto map = shipped(name);
    const int x = map->width / 2;
    int open = 0;
    for (int y = 0; y < map->height; ++y) open += map->is_wall({x, y}) ? 0 : 1;
    EXPECT_EQ(open, passages) << name;
  }
}

TEST(ShippedMaps, CheckersHasLemonWallBeforeApples) {
  const auto map = shipped("checkers");
  // Column 3 is all lemons between the spawn columns and the apple field.
  for (int y = 1; y < map->height - 1; ++y) {
    EXPECT_NE(std::find(map->lemons.begin(), map->lemons.end(), Coord{3, y}), map->lemons.end());
  }
  EXPECT_FALSE(map->apples.empty());
}

TEST(Reset, SameSeedSameState) {
  for (const auto& name : kShippedMaps) {
    const auto map = shipped(name);
    const auto a = reset(map, 42, Mode::Train);
    const auto b = reset(map, 42, Mode::Train);
    EXPECT_TRUE(a.state == b.state) << name;
    EXPECT_EQ(a.observations, b.observations) << name;
  }
}

TEST(Reset, EpisodeLimitsByMode) {
  const auto map = shipped("switch_open");
  EXPECT_EQ(reset(map, 1, Mode::Train).state.episode_limit, 5000);
  EXPECT_EQ(reset(map, 1, Mode::Test).state.episode_limit, 2000);
  EXPECT_EQ(reset(map, 1, Mode::Train, 500).state.episode_limit, 500);
}

TEST(Reset, CheckersItemsAllPresent) {
  const auto map = shipped("checkers");
  const auto s = reset(map, 3, Mode::Train).state;
  EXPECT_EQ(s.remaining_apples(), static_cast<int>(map->apples.size()));
  EXPECT_EQ(s.remaining_lemons(), static_cast<int>(map->lemons.size()));
}

TEST(Reset, AgentsOnListedSpawns) {
  const auto map = shipped("fetch_open");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = reset(map, seed, Mode::Train).state;
    for (int a = 0; a < 2; ++a) {
      const auto& spawns = map->spawns[static_cast<std::size_t>(a)];
      EXPECT_NE(std::find(spawns.begin(), spawns.end(), s.poses[static_cast<std::size_t>(a)].position),
                spawns.end());
    }
    EXPECT_NE(s.poses[0].position, s.poses[1].position);
  }
}

TEST(Step, BothStandIsANoOp) {
  auto s = reset(shipped("switch_open"), 5, Mode::Train).state;
  const auto before = s.poses;
  const auto r = act(s, Action::Stand, Action::Stand);
  EXPECT_EQ(r.team_reward, 0.0);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(s.step, 1);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(s.poses[i].position, before[i].position);
    EXPECT_EQ(s.poses[i].orientation, before[i].orientation);
  }
}

TEST(Step, MovementDirectionsAreEgocentric) {
  const auto map = parse("task: switch\n.....\n.....\n.....\n1a..2\n....b\n");
  auto s = place(map, {2, 2}, Orientation::East, {4, 3}, Orientation::North);
  act(s, Action::Forward, Action::Stand);
  EXPECT_EQ(s.poses[0].position, (Coord{3, 2}));
  act(s, Action::Backward, Action::Stand);
  EXPECT_EQ(s.poses[0].position, (Coord{2, 2}));
  act(s, Action::StepLeft, Action::Stand);  // facing east, left is north
  EXPECT_EQ(s.poses[0].position, (Coord{2, 1}));
  act(s, Action::StepRight, Action::Stand);
  EXPECT_EQ(s.poses[0].position, (Coord{2, 2}));
  act(s, Action::RotateLeft, Action::Stand);
  EXPECT_EQ(s.poses[0].orientation, Orientation::North);
  act(s, Action::RotateRight, Action::RotateRight);
  EXPECT_EQ(s.poses[0].orientation, Orientation::East);
  EXPECT_EQ(s.poses[1].orientation, Orientation::East);
}

TEST(Step, AfterDoneIsUsageError) {
  auto s = reset(shipped("switch_open"), 1, Mode::Train, 2).state;
  act(s, Action::Stand, Action::Stand);
  const auto r = act(s, Action::Stand, Action::Stand);
  EXPECT_TRUE(r.done);
  EXPECT_THROW(act(s, Action::Stand, Action::Stand), UsageError);
}

TEST(Step, SwitchGoalScoresOnceAndFreezes) {
  const auto map = parse("task: switch\n#####\n#1a.#\n#2.b#\n#####\n");
  auto s = place(map, {1, 1}, Orientation::East, {1, 2}, Orientation::East);
  auto r = act(s, Action::Forward, Action::Stand);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RewardEvent{0, EventKind::Goal, 1.0}));
  EXPECT_TRUE(s.poses[0].reached_goal);
  // Further movement of agent 1 is ignored.
  r = act(s, Action::Forward, Action::Forward);
  EXPECT_EQ(s.poses[0].position, (Coord{2, 1}));
  EXPECT_EQ(s.poses[0].orientation, Orientation::East);
  EXPECT_EQ(r.team_reward, 0.0);
  EXPECT_EQ(s.task_resets, 0);
  // Agent 2 reaches its goal: +1 and a joint task reset within the episode.
  r = act(s, Action::RotateLeft, Action::Forward);
  EXPECT_EQ(r.team_reward, 1.0);
  EXPECT_EQ(s.task_resets, 1);
  EXPECT_FALSE(s.poses[0].reached_goal);
  EXPECT_FALSE(s.poses[1].reached_goal);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(s.step, 3);
}

TEST(Step, FetchPickupThenDropoff) {
  const auto map = shipped("fetch_open");  // D at (1,3), P at (13,3)
  auto s = place(map, {12, 3}, Orientation::East, {1, 1}, Orientation::North);
  auto r = act(s, Action::Forward, Action::Stand);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RewardEvent{0, EventKind::Pickup, 3.0}));
  EXPECT_TRUE(s.poses[0].carrying);
  EXPECT_FALSE(s.pickup_available);

  // The other agent cannot pick up while the item is in flight.
  s.poses[1].position = {13, 2};
  s.poses[1].orientation = Orientation::South;
  s.poses[0].position = {2, 3};
  s.poses[0].orientation = Orientation::West;
  r = act(s, Action::Stand, Action::Forward);
  EXPECT_EQ(r.team_reward, 0.0);
  EXPECT_FALSE(s.poses[1].carrying);

  r = act(s, Action::Forward, Action::Stand);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RewardEvent{0, EventKind::Dropoff, 5.0}));
  EXPECT_FALSE(s.poses[0].carrying);
  EXPECT_TRUE(s.pickup_available);

  // Re-armed pickup: agent 2, already standing on it, collects on the next step.
  r = act(s, Action::Stand, Action::Stand);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0], (RewardEvent{1, EventKind::Pickup, 3.0}));
}

TEST(Step, CheckersAppleAndLemonSameStep) {
  const auto map = parse("task: checkers\n######\n#1AA.#\n#2L..#\n######\n");
  auto s = place(map, {1, 1}, Orientation::East, {1, 2}, Orientation::East);
  const auto r = act(s, Action::Forward, Action::Forward);
  EXPECT_EQ(r.team_reward, 9.0);
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.events[0], (RewardEvent{0, EventKind::Apple, 10.0}));
  EXPECT_EQ(r.events[1], (RewardEvent{1, EventKind::Lemon, -1.0}));
  EXPECT_EQ(s.remaining_apples(), 1);
  EXPECT_EQ(s.remaining_lemons(), 0);
}

TEST(Step, CheckersRoleRewards) {
  const auto map = parse("task: checkers\n######\n#2LA.#\n#1A..#\n######\n");
  auto s = place(map, {1, 2}, Orientation::East, {1, 1}, Orientation::East);
  auto r = act(s, Action::Stand, Action::Forward);
  EXPECT_EQ(r.team_reward, -1.0);
  r = act(s, Action::Forward, Action::Forward);
  // Agent 1 takes the last apple (+10) and agent 2 another apple (+1): both
  // apples gone, so the task resets.
  EXPECT_EQ(r.team_reward, 11.0);
  EXPECT_EQ(s.task_resets, 1);
  EXPECT_EQ(s.remaining_apples(), 2);
  EXPECT_EQ(s.remaining_lemons(), 1);
}

TEST(Step, BeamLightsRayForOneStep) {
  const auto map = parse("task: switch\n#######\n#1...a#\n#2...b#\n#######\n");
  auto s = place(map, {1, 1}, Orientation::East, {1, 2}, Orientation::North);
  act(s, Action::UseBeam, Action::Stand);
  for (int x = 2; x <= 5; ++x) EXPECT_EQ(s.beams[map->index({x, 1})], 1) << x;
  EXPECT_EQ(s.beams[map->index({6, 1})], 0);
  const auto obs = render_observation(s, 0);
  EXPECT_EQ(pixel(obs, 3, 2), palette::kBeam);
  act(s, Action::Stand, Action::Stand);
  EXPECT_EQ(std::count(s.beams.begin(), s.beams.end(), 1), 0);
}

TEST(ResolveMoves, WallKeepsAgentInPlace) {
  const auto map = parse("task: switch\n#####\n#1a.#\n#2.b#\n#####\n");
  auto s = place(map, {1, 1}, Orientation::North, {1, 2}, Orientation::West);
  act(s, Action::Forward, Action::Forward);
  EXPECT_EQ(s.poses[0].position, (Coord{1, 1}));
  EXPECT_EQ(s.poses[1].position, (Coord{1, 2}));
}

TEST(ResolveMoves, OffGridKeepsAgentInPlace) {
  const auto map = parse("task: switch\n1a.\n...\n2b.\n");
  auto s = place(map, {0, 0}, Orientation::North, {0, 2}, Orientation::South);
  const std::vector<Coord> targets{{0, -1}, {0, 3}};
  const auto out = resolve_moves(s, targets);
  EXPECT_EQ(out[0], (Coord{0, 0}));
  EXPECT_EQ(out[1], (Coord{0, 2}));
}

TEST(ResolveMoves, SameTargetCoinFlipIsFair) {
  const auto map = parse("task: switch\n.....\n1.a.2\n....b\n");
  auto s = place(map, {1, 1}, Orientation::East, {3, 1}, Orientation::West);
  const std::vector<Coord> targets{{2, 1}, {2, 1}};
  int first = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    const auto out = resolve_moves(s, targets);
    const bool a = out[0] == Coord{2, 1};
    const bool b = out[1] == Coord{2, 1};
    ASSERT_NE(a, b);
    if (a) {
      EXPECT_EQ(out[1], (Coord{3, 1}));
    } else {
      EXPECT_EQ(out[0], (Coord{1, 1}));
    }
    first += a ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(first) / trials, 0.5, 0.02);
}

TEST(ResolveMoves, HeadOnSwapBothStay) {
  const auto map = parse("task: switch\n.....\n.12a.\n....b\n");
  auto s = place(map, {1, 1}, Orientation::East, {2, 1}, Orientation::West);
  act(s, Action::Forward, Action::Forward);
  EXPECT_EQ(s.poses[0].position, (Coord{1, 1}));
  EXPECT_EQ(s.poses[1].position, (Coord{2, 1}));
}

TEST(ResolveMoves, MoveIntoStationaryAgentBlocked) {
  const auto map = parse("task: switch\n.....\n.12a.\n....b\n");
  auto s = place(map, {1, 1}, Orientation::East, {2, 1}, Orientation::North);
  act(s, Action::Forward, Action::Stand);
  EXPECT_EQ(s.poses[0].position, (Coord{1, 1}));
}

TEST(ResolveMoves, FollowingIntoVacatedCellBlocked) {
  // Agent 1 follows agent 2, whose move is blocked by a wall.
  const auto map = parse("task: switch\n####\n12a#\n...b\n");
  auto s = place(map, {0, 1}, Orientation::East, {1, 1}, Orientation::North);
  act(s, Action::Forward, Action::Forward);
  EXPECT_EQ(s.poses[0].position, (Coord{0, 1}));
  EXPECT_EQ(s.poses[1].position, (Coord{1, 1}));
}

TEST(Render, PalettePinned) {
  EXPECT_EQ(palette::kWall, (Rgb{120, 120, 120}));
  EXPECT_EQ(palette::kFloor, (Rgb{0, 0, 0}));
  EXPECT_EQ(palette::kSelf, (Rgb{0, 0, 255}));
  EXPECT_EQ(palette::kTeammateRed, (Rgb{255, 0, 0}));
  EXPECT_EQ(palette::kTeammateLightBlue, (Rgb{0, 160, 255}));
  EXPECT_EQ(palette::kGoal, (Rgb{0, 255, 0}));
  EXPECT_EQ(palette::kPickup, (Rgb{0, 255, 0}));
  EXPECT_EQ(palette::kDropoff, (Rgb{255, 255, 0}));
  EXPECT_EQ(palette::kApple, (Rgb{0, 255, 0}));
  EXPECT_EQ(palette::kLemon, (Rgb{255, 160, 0}));
  EXPECT_EQ(palette::kBeam, (Rgb{255, 255, 0}));
}

TEST(Render, SelfAtRearCenter) {
  for (const auto& name : kShippedMaps) {
    const auto r = reset(shipped(name), 9, Mode::Train);
    for (const auto& obs : r.observations) EXPECT_EQ(pixel(obs, 4, 2), palette::kSelf) << name;
  }
}

TEST(Render, WallOneAheadFillsRow) {
  const auto map = parse("task: switch\n#######\n#.....#\n#.1a2.#\n#...b.#\n#######\n");
  // Agent 1 at (3,1) facing north: the border wall is one ahead.
  auto s = place(map, {3, 1}, Orientation::North, {4, 2}, Orientation::North);
  const auto obs = render_observation(s, 0);
  for (int col = 0; col < 5; ++col) EXPECT_EQ(pixel(obs, 3, col), palette::kWall) << col;
  // Depth 2 and beyond are off the map.
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 5; ++col) EXPECT_EQ(pixel(obs, row, col), palette::kOffMap);
  }
}

TEST(Render, TeammateColorsByTask) {
  const auto fetch = parse("task: fetch\n#######\n#..2..#\n#.....#\n#..1..#\n#D...P#\n#######\n");
  auto s = place(fetch, {3, 3}, Orientation::North, {3, 1}, Orientation::South);
  auto obs = render_observation(s, 0);
  EXPECT_EQ(pixel(obs, 2, 2), palette::kTeammateLightBlue);
  // Agent 2 facing south sees agent 1 two ahead.
  obs = render_observation(s, 1);
  EXPECT_EQ(pixel(obs, 2, 2), palette::kTeammateLightBlue);

  const auto sw = parse("task: switch\n#######\n#..2..#\n#.....#\n#..1..#\n#a...b#\n#######\n");
  s = place(sw, {3, 3}, Orientation::North, {3, 1}, Orientation::South);
  obs = render_observation(s, 0);
  EXPECT_EQ(pixel(obs, 2, 2), palette::kTeammateRed);
}

TEST(Render, OwnSwitchGoalOnly) {
  const auto map = parse("task: switch\n#######\n#.a.b.#\n#.....#\n#.1.2.#\n#######\n");
  auto s = place(map, {2, 3}, Orientation::North, {4, 3}, Orientation::North);
  const auto obs = render_observation(s, 0);
  // Agent 1 faces north; goal a is at depth 2 straight ahead, goal b at depth 2, two to the right.
  EXPECT_EQ(pixel(obs, 2, 2), palette::kGoal);
  EXPECT_EQ(pixel(obs, 2, 4), palette::kFloor);
}

TEST(Render, FetchPickupHiddenWhileCarried) {
  const auto map = parse("task: fetch\n#######\n#..P..#\n#.....#\n#..1..#\n#D...2#\n#######\n");
  auto s = place(map, {3, 3}, Orientation::North, {5, 4}, Orientation::North);
  EXPECT_EQ(pixel(render_observation(s, 0), 2, 2), palette::kPickup);
  s.pickup_available = false;
  EXPECT_EQ(pixel(render_observation(s, 0), 2, 2), palette::kFloor);
}

namespace {

// Rotates a square map a quarter turn counter-clockwise (as drawn):
// new[y][x] = old[x][n-1-y], so a world vector (dx, dy) becomes (dy, -dx).
std::string rotate_ccw(const std::vector<std::string>& rows) {
  const std::size_t n = rows.size();
  std::string out;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) out += rows[x][n - 1 - y];
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    rows.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return rows;
}

}  // namespace

TEST(Render, EgocentricRotationOracle) {
  // Asymmetric 7x7 world; agent 1 at the center.
  std::vector<std::string> rows{
      "#.A.L..",
      "..#....",
      "L...A#.",
      "...1...",
      ".A...L.",
      "#..2..#",
      "..L.#..",
  };
  // The rotated copy of the world with the agent turned by the same amount
  // must render identically: facing east in the original equals facing north
  // after turning the world a quarter counter-clockwise.
  const std::array<Orientation, 4> facing{Orientation::North, Orientation::East, Orientation::South,
                                          Orientation::West};
  for (int turns = 0; turns < 4; ++turns) {
    std::vector<std::string> world = rows;
    for (int k = 0; k < turns; ++k) world = split_rows(rotate_ccw(world));
    std::string text = "task: checkers\n";
    for (const auto& r : world) text += r + "\n";
    const auto map = parse(text);
    const Coord center{3, 3};
    const Coord other = map->spawns[1][0];

    // Original world, agent facing `facing[turns]`.
    std::string base = "task: checkers\n";
    for (const auto& r : rows) base += r + "\n";
    const auto base_map = parse(base);
    auto s0 = place(base_map, center, facing[static_cast<std::size_t>(turns)],
                    base_map->spawns[1][0], Orientation::North);
    auto s1 = place(map, center, Orientation::North, other, Orientation::North);
    EXPECT_EQ(render_observation(s0, 0), render_observation(s1, 0)) << "turns " << turns;
  }
}

TEST(Render, LocalityOutsideWindow) {
  const std::string base =
      "task: switch\n"
      "#########\n"
      "#.......#\n"
      "#.......#\n"
      "#...1...#\n"
      "#.......#\n"
      "#2.....a#\n"
      "#b......#\n"
      "#########\n";
  const auto map = parse(base);
  const Coord self{4, 4};
  for (const auto o : {Orientation::North, Orientation::East, Orientation::South, Orientation::West}) {
    auto s = place(map, self, o, {1, 6}, Orientation::North);
    const auto ref = render_observation(s, 0);
    // Cells the window covers, computed from the orientation.
    std::set<Coord> window;
    const Coord f = forward_vector(o);
    const Coord r = right_vector(o);
    for (int depth = 0; depth < 5; ++depth) {
      for (int lat = -2; lat <= 2; ++lat) {
        window.insert({self.x + depth * f.x + lat * r.x, self.y + depth * f.y + lat * r.y});
      }
    }
    for (int y = 0; y < map->height; ++y) {
      for (int x = 0; x < map->width; ++x) {
        const Coord c{x, y};
        if (window.count(c) || c == s.poses[1].position || c == map->goals[0] ||
            c == map->goals[1]) {
          continue;
        }
        auto edited = *map;
        edited.cells[edited.index(c)] = edited.is_wall(c) ? Cell::Floor : Cell::Wall;
        auto s2 = s;
        s2.map = std::make_shared<const GridMap>(edited);
        EXPECT_EQ(render_observation(s2, 0), ref) << "cell " << x << "," << y;
      }
    }
  }
}

TEST(Determinism, ReplayedActionsReproduceRewards) {
  for (const auto& name : kShippedMaps) {
    const auto map = shipped(name);
    auto s = reset(map, 77, Mode::Train, 3000).state;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    std::vector<std::array<Action, 2>> log;
    std::vector<double> rewards;
    while (!s.done()) {
      const std::array<Action, 2> a{static_cast<Action>(pick(rng)), static_cast<Action>(pick(rng))};
      log.push_back(a);
      rewards.push_back(step(s, a).team_reward);
    }
    auto replay = reset(map, 77, Mode::Train, 3000).state;
    for (std::size_t t = 0; t < log.size(); ++t) {
      ASSERT_EQ(step(replay, log[t]).team_reward, rewards[t]) << name << " step " << t;
    }
    EXPECT_TRUE(replay == s) << name;
  }
}

TEST(Invariants, RandomPolicyAudit) {
  for (const auto& name : kShippedMaps) {
    const auto map = shipped(name);
    auto s = reset(map, 11, Mode::Train, 3000).state;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    double total = 0.0;
    double event_total = 0.0;
    std::set<double> amounts;
    while (!s.done()) {
      const std::array<Action, 2> a{static_cast<Action>(pick(rng)), static_cast<Action>(pick(rng))};
      const auto r = step(s, a);
      total += r.team_reward;
      double step_sum = 0.0;
      for (const auto& e : r.events) {
        step_sum += e.amount;
        amounts.insert(e.amount);
      }
      ASSERT_EQ(step_sum, r.team_reward);
      event_total += step_sum;
      ASSERT_NE(s.poses[0].position, s.poses[1].position) << name;
      for (const auto& p : s.poses) ASSERT_FALSE(map->is_wall(p.position)) << name;
      if (map->task == Task::Checkers) {
        ASSERT_EQ(s.apples_collected + s.remaining_apples(), static_cast<int>(map->apples.size()));
        ASSERT_EQ(s.lemons_collected + s.remaining_lemons(), static_cast<int>(map->lemons.size()));
      }
    }
    EXPECT_EQ(total, event_total);
    const std::set<double> allowed = map->task == Task::Switch  ? std::set<double>{1.0}
                                     : map->task == Task::Fetch ? std::set<double>{3.0, 5.0}
                                         : std::set<double>{10.0, -10.0, 1.0, -1.0};
    for (const double v : amounts) EXPECT_TRUE(allowed.count(v)) << name << " amount " << v;
  }
}
