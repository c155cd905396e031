#pragma once

#include <random>

#include "vdn/agents/network.hpp"
#include "vdn/agents/policy.hpp"
#include "vdn/nn/gradcheck.hpp"
#include "vdn/trainer/trainer.hpp"

namespace testutil {

// Random segment with `length` real steps out of `steps`; the rest is padding.
inline vdn::train::TrajectorySegment random_segment(std::mt19937_64& rng, const vdn::agents::PolicyNetwork<float>& shape,
                                                    int steps, int length) {
  using namespace vdn;
  std::uniform_int_distribution<int> byte(0, 255), action(0, agents::kNumActions - 1);
  std::uniform_real_distribution<float> reward(-1.0f, 1.0f), state(-0.5f, 0.5f);
  auto observation = [&] {
    grid::Observation o;
    for (auto& v : o.data) v = static_cast<std::uint8_t>(byte(rng));
    return o;
  };
  train::TrajectorySegment seg;
  seg.length = length;
  for (int t = 0; t < steps; ++t) {
    const bool real = t < length;
    seg.observations.push_back({observation(), observation()});
    seg.actions.push_back({real ? action(rng) : 0, real ? action(rng) : 0});
    seg.team_rewards.push_back(real ? reward(rng) : 0.0f);
    seg.terminal.push_back(real ? (t + 1 == length && length < steps ? 1 : 0) : 1);
  }
  seg.bootstrap_obs = {observation(), observation()};
  seg.initial_hidden = shape.initial_hidden();
  for (auto& core : seg.initial_hidden.cores) {
    for (auto& v : core.h) v = state(rng);
    for (auto& v : core.c) v = state(rng);
  }
  return seg;
}

inline std::vector<std::vector<double>> random_targets(std::mt19937_64& rng, const vdn::agents::AgentSpec& spec,
                                                       int steps) {
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t series = spec.independent() ? vdn::agents::kNumAgents : 1;
  std::vector<std::vector<double>> out(series, std::vector<double>(static_cast<std::size_t>(steps)));
  for (auto& s : out) {
    for (auto& v : s) v = g(rng);
  }
  return out;
}

struct GradientProblem {
  vdn::agents::PolicyNetwork<double> net;
  vdn::train::TrajectorySegment seg;
  std::vector<std::vector<double>> targets;
  vdn::train::Workspace<double> ws;
  // Finite-difference side: the same network evaluated in extended precision,
  // so rounding in the loss stays well below the smallest gradients checked.
  vdn::agents::PolicyNetwork<long double> wide;
  vdn::train::Workspace<long double> wide_ws;
  long double baseline = 0.0L;

  GradientProblem(int preset, std::uint64_t seed, int steps, int length)
      : net(vdn::agents::AgentSpec::preset(preset), seed), wide(vdn::agents::AgentSpec::preset(preset), 0) {
    std::mt19937_64 rng(seed * 7919 + 1);
    const vdn::agents::PolicyNetwork<float> shape(vdn::agents::AgentSpec::preset(preset), 0);
    seg = random_segment(rng, shape, steps, length);
    targets = random_targets(rng, net.spec(), steps);
  }

  // 0.5 * sum of squared TD errors.
  double loss() { return 0.5 * vdn::train::segment_loss(net, seg, targets, 1.0, false, ws).sum_sq_td; }

  void gradients() {
    net.zero_grad();
    vdn::train::segment_loss(net, seg, targets, 1.0, true, ws);
  }

  // 0.5 * sum of squared TD errors over real steps, recomputed from the
  // extended-precision Q values.
  long double wide_loss() {
    wide.copy_parameters_from(net);
    vdn::train::segment_loss(wide, seg, targets, 1.0, false, wide_ws);
    long double total = 0.0L;
    for (int t = 0; t < seg.length; ++t) {
      const auto& out = wide_ws.outputs[static_cast<std::size_t>(t)];
      const auto& actions = seg.actions[static_cast<std::size_t>(t)];
      if (net.spec().independent()) {
        for (std::size_t i = 0; i < out.heads.size(); ++i) {
          const long double td = targets[i][static_cast<std::size_t>(t)] - out.heads[i][static_cast<std::size_t>(actions[i])];
          total += 0.5L * td * td;
        }
      } else {
        const long double td = targets[0][static_cast<std::size_t>(t)] - vdn::agents::joint_q(out, actions);
        total += 0.5L * td * td;
      }
    }
    return total;
  }

  vdn::nn::GradCheckResult check() {
    gradients();
    baseline = wide_loss();
    // Offsetting by the unperturbed loss keeps the difference exact when
    // narrowed to double.
    return vdn::nn::gradient_check(net.parameters(), [&] { return loss(); },
                              [&] { return static_cast<double>(wide_loss() - baseline); });
  }
};

}  // namespace testutil
