#include "vdn/agents/policy.hpp"

#include <cmath>

namespace vdn::agents {

int encode_joint(std::span<const int> actions) {
  int index = 0;
  for (const int a : actions) index = index * kNumActions + a;
  return index;
}

std::vector<int> decode_joint(int index) {
  std::vector<int> actions(kNumAgents);
  for (int i = kNumAgents - 1; i >= 0; --i) {
    actions[static_cast<std::size_t>(i)] = index % kNumActions;
    index /= kNumActions;
  }
  return actions;
}

std::vector<int> select_actions(const QOutput<float>& out, double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (out.combinatorial) {
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> any(0, kJointActions - 1);
      return decode_joint(any(rng));
    }
    return greedy_actions(out);
  }
  std::uniform_int_distribution<int> any(0, kNumActions - 1);
  std::vector<int> actions;
  actions.reserve(out.heads.size());
  for (const auto& h : out.heads) {
    if (coin(rng) < epsilon) {
      actions.push_back(any(rng));
    } else {
      actions.push_back(argmax<float>(h));
    }
  }
  return actions;
}

bool check_agent_invariance(const PolicyNetwork<float>& net, std::span<const History> histories,
                            InvarianceMode mode, double tolerance) {
  if (!net.spec().shared_weights) {
    throw UsageError("agent invariance is only defined for shared-weight networks, got " +
                     net.spec().label());
  }
  const bool permute_roles = mode == InvarianceMode::Auto && net.spec().role_info;
  const std::vector<int> identity{0, 1};
  const std::vector<int> swapped_roles = permute_roles ? std::vector<int>{1, 0} : identity;

  for (const auto& history : histories) {
    auto h_orig = net.initial_hidden();
    auto h_perm = net.initial_hidden();
    for (const auto& step : history) {
      const std::vector<std::vector<float>> perm{step[1], step[0]};
      const auto q = net.forward(step, h_orig, nullptr, identity);
      const auto qp = net.forward(perm, h_perm, nullptr, swapped_roles);
      for (int i = 0; i < kNumAgents; ++i) {
        const auto a = q.agent(i);
        const auto b = qp.agent(kNumAgents - 1 - i);
        for (std::size_t k = 0; k < a.size(); ++k) {
          if (std::abs(static_cast<double>(a[k]) - b[k]) > tolerance) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace vdn::agents
