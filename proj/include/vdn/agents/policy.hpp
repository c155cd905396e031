#pragma once

#include <random>
#include <span>
#include <vector>

#include "vdn/agents/network.hpp"

namespace vdn::agents {

// Lowest index wins ties.
template <typename T>
int argmax(std::span<const T> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

// Joint action index with agent 1 as the most significant digit, so index
// order is lexicographic in (a1, a2).
int encode_joint(std::span<const int> actions);
std::vector<int> decode_joint(int index);

// Sum of the chosen per-agent entries in agent order, or the joint entry for
// a combinatorial output. `column` selects the batch entry.
template <typename T>
T joint_q(const QOutput<T>& out, std::span<const int> actions, std::size_t column = 0) {
  if (out.combinatorial) return out.joint(column)[static_cast<std::size_t>(encode_joint(actions))];
  T total{0};
  for (std::size_t i = 0; i < out.heads.size(); ++i) {
    total += out.agent(static_cast<int>(i), column)[static_cast<std::size_t>(actions[i])];
  }
  return total;
}

// max over joint actions of joint_q; for per-agent outputs this is the sum of
// per-agent maxima.
template <typename T>
T max_joint_q(const QOutput<T>& out, std::size_t column = 0) {
  if (out.combinatorial) {
    const auto q = out.joint(column);
    return q[static_cast<std::size_t>(argmax<T>(q))];
  }
  T total{0};
  for (std::size_t i = 0; i < out.heads.size(); ++i) {
    const auto q = out.agent(static_cast<int>(i), column);
    total += q[static_cast<std::size_t>(argmax<T>(q))];
  }
  return total;
}

template <typename T>
std::vector<int> greedy_actions(const QOutput<T>& out, std::size_t column = 0) {
  if (out.combinatorial) return decode_joint(argmax<T>(out.joint(column)));
  std::vector<int> actions;
  for (std::size_t i = 0; i < out.heads.size(); ++i) {
    actions.push_back(argmax<T>(out.agent(static_cast<int>(i), column)));
  }
  return actions;
}

// Epsilon-greedy with independent draws per agent (one draw for the
// combinatorial head).
std::vector<int> select_actions(const QOutput<float>& out, double epsilon, std::mt19937_64& rng);

// Per-step, per-agent encoded observations of one episode prefix.
using History = std::vector<std::vector<std::vector<float>>>;

enum class InvarianceMode {
  Auto,        // roles permuted along with observations when role info is on
  RolesFixed,  // roles stay attached to the slots
};

// True iff swapping the agents' observation histories swaps the per-agent Q
// outputs at every step (within tolerance). Requires shared weights.
bool check_agent_invariance(const PolicyNetwork<float>& net, std::span<const History> histories,
                            InvarianceMode mode = InvarianceMode::Auto, double tolerance = 1e-6);

}  // namespace vdn::agents
