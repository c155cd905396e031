#include "vdn/harness/verify.hpp"

#include <array>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "vdn/agents/policy.hpp"
#include "vdn/harness/config.hpp"
#include "vdn/nn/gradcheck.hpp"
#include "vdn/trainer/trainer.hpp"

namespace vdn::harness {

namespace {

using agents::AgentSpec;
using agents::PolicyNetwork;

train::TrajectorySegment random_segment(std::mt19937_64& rng, const PolicyNetwork<float>& shape, int steps) {
  std::uniform_int_distribution<int> byte(0, 255), action(0, agents::kNumActions - 1);
  std::uniform_real_distribution<float> reward(-1.0f, 1.0f), state(-0.5f, 0.5f);
  auto observation = [&] {
    grid::Observation o;
    for (auto& v : o.data) v = static_cast<std::uint8_t>(byte(rng));
    return o;
  };
  train::TrajectorySegment seg;
  seg.length = steps;
  for (int t = 0; t < steps; ++t) {
    seg.observations.push_back({observation(), observation()});
    seg.actions.push_back({action(rng), action(rng)});
    seg.team_rewards.push_back(reward(rng));
    seg.terminal.push_back(0);
  }
  seg.bootstrap_obs = {observation(), observation()};
  seg.initial_hidden = shape.initial_hidden();
  for (auto& core : seg.initial_hidden.cores) {
    for (auto& v : core.h) v = state(rng);
    for (auto& v : core.c) v = state(rng);
  }
  return seg;
}

// Max relative error of the BPTT gradient of one random (preset, segment)
// pair against central differences.
nn::GradCheckResult gradient_pair(int preset, std::uint64_t seed, bool inject_fault) {
  const auto spec = AgentSpec::preset(preset);
  PolicyNetwork<double> net(spec, seed);
  PolicyNetwork<long double> wide(spec, 0);
  const PolicyNetwork<float> shape(spec, 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const int steps = 8;
  const auto seg = random_segment(rng, shape, steps);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> targets(spec.independent() ? 2 : 1, std::vector<double>(steps));
  for (auto& s : targets) {
    for (auto& v : s) v = g(rng);
  }

  train::Workspace<double> ws;
  train::Workspace<long double> wide_ws;
  net.zero_grad();
  train::segment_loss(net, seg, targets, 1.0, true, ws);
  if (inject_fault) net.parameters().front()->grad[0] += 1.0;

  auto loss = [&] { return 0.5 * train::segment_loss(net, seg, targets, 1.0, false, ws).sum_sq_td; };
  // Same loss in extended precision, recomputed from the wide Q values.
  auto wide_loss = [&] {
    wide.copy_parameters_from(net);
    train::segment_loss(wide, seg, targets, 1.0, false, wide_ws);
    long double total = 0.0L;
    for (int t = 0; t < steps; ++t) {
      const auto& q = wide_ws.outputs[static_cast<std::size_t>(t)];
      const auto& a = seg.actions[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const long double value = spec.independent() ? q.agent(static_cast<int>(k))[static_cast<std::size_t>(a[k])]
                                                     : agents::joint_q(q, a);
        const long double td = targets[k][static_cast<std::size_t>(t)] - value;
        total += 0.5L * td * td;
      }
    }
    return total;
  };
  const long double base = wide_loss();
  return nn::gradient_check(net.parameters(), loss, [&] { return static_cast<double>(wide_loss() - base); });
}

SuiteResult gradient_suite(const VerifyOptions& options) {
  const int presets[] = {1, 3, 5, 7, 8, 9};
  const int pairs = 20;
  double worst = 0.0;
  std::string where;
  for (int k = 0; k < pairs; ++k) {
    const int preset = presets[k % 6];
    const auto r = gradient_pair(preset, 5000 + static_cast<std::uint64_t>(k), options.inject_gradient_fault && k == 0);
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = "preset " + std::to_string(preset) + " " + r.worst_param + "[" + std::to_string(r.worst_index) + "]";
    }
  }
  std::ostringstream detail;
  detail << pairs << " pairs, max rel. err " << worst << " at " << where << " (threshold 1e-4)";
  return {"gradient", worst < 1e-4, detail.str()};
}

SuiteResult argmax_suite() {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> coarse(-3, 3);
  std::normal_distribution<float> fine(0.0f, 1.0f);
  const int trials = 10000;
  int agree = 0;
  for (int trial = 0; trial < trials; ++trial) {
    agents::QOutput<float> q;
    q.heads.assign(2, std::vector<float>(agents::kNumActions));
    for (auto& h : q.heads) {
      // Half the trials use small integers so ties are common.
      for (auto& v : h) v = trial % 2 ? static_cast<float>(coarse(rng)) : fine(rng);
    }
    int best_a1 = 0, best_a2 = 0;
    float best = q.heads[0][0] + q.heads[1][0];
    for (int a1 = 0; a1 < agents::kNumActions; ++a1) {
      for (int a2 = 0; a2 < agents::kNumActions; ++a2) {
        const float v = q.heads[0][static_cast<std::size_t>(a1)] + q.heads[1][static_cast<std::size_t>(a2)];
        if (v > best) {
          best = v;
          best_a1 = a1;
          best_a2 = a2;
        }
      }
    }
    if (agents::greedy_actions(q) == std::vector<int>{best_a1, best_a2}) ++agree;
  }
  return {"argmax", agree == trials,
          std::to_string(agree) + "/" + std::to_string(trials) + " greedy tuples equal the brute-force joint argmax"};
}

SuiteResult invariance_suite() {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> length(1, 10);
  std::vector<agents::History> histories(100);
  for (auto& h : histories) {
    const int n = length(rng);
    for (int t = 0; t < n; ++t) {
      std::vector<std::vector<float>> step(agents::kNumAgents, std::vector<float>(agents::kObsInput));
      for (auto& o : step) {
        for (auto& v : o) v = static_cast<float>(byte(rng)) / 255.0f;
      }
      h.push_back(std::move(step));
    }
  }
  std::string detail;
  bool ok = true;
  for (const int preset : {3, 7, 4}) {
    const PolicyNetwork<float> net(AgentSpec::preset(preset), 100 + static_cast<std::uint64_t>(preset));
    const bool pass = agents::check_agent_invariance(net, histories, agents::InvarianceMode::Auto, 1e-6);
    ok = ok && pass;
    detail += "preset " + std::to_string(preset) + (pass ? " invariant" : " NOT invariant") + "; ";
  }
  return {"invariance", ok, detail + "100 histories, tolerance 1e-6"};
}

// Explicit mixture of n-step returns, without the recursion.
std::vector<double> lambda_mixture(const std::vector<double>& r, const std::vector<double>& boot, double gamma,
                                   double lambda) {
  const std::size_t n = r.size();
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t horizon = n - t;
    double total = 0.0;
    for (std::size_t k = 1; k <= horizon; ++k) {
      double g = 0.0;
      for (std::size_t j = 0; j < k; ++j) g += std::pow(gamma, static_cast<double>(j)) * r[t + j];
      g += std::pow(gamma, static_cast<double>(k)) * boot[t + k - 1];
      const double weight = k < horizon ? (1.0 - lambda) * std::pow(lambda, static_cast<double>(k - 1))
                                        : std::pow(lambda, static_cast<double>(horizon - 1));
      total += weight * g;
    }
    out[t] = total;
  }
  return out;
}

SuiteResult lambda_suite() {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  auto compare = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(8), boot(8);
    for (auto& v : r) v = g(rng);
    for (auto& v : boot) v = g(rng);
    const double gamma = 0.5 + 0.5 * u(rng);
    const double lambda = trial < 2 ? static_cast<double>(trial) : u(rng);
    compare(train::lambda_returns(r, boot, gamma, lambda), lambda_mixture(r, boot, gamma, lambda));
    if (trial == 0) {  // one-step targets
      std::vector<double> one(8);
      for (std::size_t t = 0; t < 8; ++t) one[t] = r[t] + gamma * boot[t];
      compare(train::lambda_returns(r, boot, gamma, 0.0), one);
    } else if (trial == 1) {  // discounted sum to the horizon
      std::vector<double> mc(8);
      for (std::size_t t = 0; t < 8; ++t) {
        double s = 0.0;
        for (std::size_t k = t; k < 8; ++k) s += std::pow(gamma, static_cast<double>(k - t)) * r[k];
        mc[t] = s + std::pow(gamma, static_cast<double>(8 - t)) * boot[7];
      }
      compare(train::lambda_returns(r, boot, gamma, 1.0), mc);
    }
  }
  std::ostringstream detail;
  detail << "1000 segments, max abs. difference " << worst << " (threshold 1e-12)";
  return {"lambda", worst <= 1e-12, detail.str()};
}

SuiteResult env_suite(const VerifyOptions& options) {
  ExperimentConfig paths;
  paths.maps_dir = options.maps_dir;
  std::string failures;
  const int steps = 10000;
  for (const auto& task : task_names()) {
    const auto map = std::make_shared<const grid::GridMap>(grid::load_map_file(paths.map_path(task)));
    const std::set<double> allowed = map->task == grid::Task::Switch  ? std::set<double>{1.0}
                                     : map->task == grid::Task::Fetch ? std::set<double>{3.0, 5.0}
                                                                      : std::set<double>{10.0, -10.0, 1.0, -1.0};
    auto run = [&](std::vector<double>& rewards, std::vector<std::array<grid::Action, 2>>* log,
                   const std::vector<std::array<grid::Action, 2>>* replay) {
      auto s = grid::reset(map, 41, grid::Mode::Train, steps).state;
      std::mt19937_64 rng(43);
      std::uniform_int_distribution<int> pick(0, agents::kNumActions - 1);
      std::string problem;
      for (int t = 0; !s.done(); ++t) {
        std::array<grid::Action, 2> a{};
        if (replay) {
          a = (*replay)[static_cast<std::size_t>(t)];
        } else {
          a = {static_cast<grid::Action>(pick(rng)), static_cast<grid::Action>(pick(rng))};
          if (log) log->push_back(a);
        }
        const auto r = grid::step(s, a);
        rewards.push_back(r.team_reward);
        double sum = 0.0;
        for (const auto& e : r.events) {
          sum += e.amount;
          if (!allowed.count(e.amount) && problem.empty()) problem = "reward amount " + std::to_string(e.amount);
        }
        if (sum != r.team_reward && problem.empty()) problem = "event sum differs from team reward";
        if (s.poses[0].position == s.poses[1].position && problem.empty()) problem = "agents share a cell";
        for (const auto& p : s.poses) {
          if ((!map->in_bounds(p.position) || map->is_wall(p.position)) && problem.empty()) problem = "agent inside a wall";
        }
        if (map->task == grid::Task::Checkers && problem.empty() &&
            (s.apples_collected + s.remaining_apples() != static_cast<int>(map->apples.size()) ||
             s.lemons_collected + s.remaining_lemons() != static_cast<int>(map->lemons.size()))) {
          problem = "item count not conserved";
        }
      }
      return problem;
    };
    std::vector<double> first, second;
    std::vector<std::array<grid::Action, 2>> log;
    auto problem = run(first, &log, nullptr);
    if (problem.empty()) {
      run(second, nullptr, &log);
      if (first != second) problem = "replay diverged";
    }
    if (static_cast<int>(first.size()) != steps && problem.empty()) problem = "wrong episode length";
    if (!problem.empty()) failures += task + ": " + problem + "; ";
  }
  return {"env", failures.empty(),
          failures.empty() ? "7 tasks x " + std::to_string(steps) + " random steps: all invariants hold" : failures};
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gradient", "argmax", "invariance", "lambda", "env"};
  return names;
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
  if (name == "gradient") return gradient_suite(options);
  if (name == "argmax") return argmax_suite();
  if (name == "invariance") return invariance_suite();
  if (name == "lambda") return lambda_suite();
  if (name == "env") return env_suite(options);
  std::string valid;
  for (const auto& n : suite_names()) valid += " " + n;
  throw ConfigError("unknown suite '" + name + "'; valid suites:" + valid);
}

}  // namespace vdn::harness
