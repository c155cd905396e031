#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdn/agents/spec.hpp"
#include "vdn/gridworld/gridworld.hpp"
#include "vdn/nn/layers.hpp"

namespace vdn::agents {

// Recurrent state of every LSTM in the network: one per agent, or a single
// one for the centralized trunk.
template <typename T>
struct JointHidden {
  std::vector<nn::LstmState<T>> cores;

  void reset() {
    for (auto& c : cores) c.zero();
  }
  template <typename U>
  JointHidden<U> cast() const {
    JointHidden<U> out;
    for (const auto& c : cores) out.cores.push_back(c.template cast<U>());
    return out;
  }
  bool operator==(const JointHidden&) const = default;
};

// Either one length-|A| vector per agent, or one length-|A|^2 joint vector.
// A batched output stores `batch` such vectors back to back in every head.
template <typename T>
struct QOutput {
  std::vector<std::vector<T>> heads;
  bool combinatorial = false;
  std::size_t batch = 1;

  std::size_t width() const { return heads.at(0).size() / batch; }
  std::span<const T> agent(int i, std::size_t column = 0) const {
    return std::span<const T>(heads.at(static_cast<std::size_t>(i))).subspan(column * width(), width());
  }
  std::span<const T> joint(std::size_t column = 0) const { return agent(0, column); }
  bool all_finite() const {
    for (const auto& h : heads) {
      for (const T v : h) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }
};

// Activations of one forward step; every entry holds `batch` columns.
template <typename T>
struct StepCache {
  std::size_t batch = 1;
  std::vector<std::vector<T>> input;       // per slot, observation (+ role one-hot)
  std::vector<std::vector<T>> first_pre;   // per slot
  std::vector<std::vector<T>> first_post;  // per slot
  std::vector<std::vector<T>> core_in;     // per core
  std::vector<nn::LstmStepCache<T>> lstm;  // per core
  std::vector<std::vector<T>> core_h;      // per core, pre-ReLU
  std::vector<std::vector<T>> core_post;   // per core
  std::vector<std::vector<T>> head_in;     // per head
};

template <typename T>
void encode_observation_into(const grid::Observation& obs, std::vector<T>& out) {
  out.resize(obs.data.size());
  for (std::size_t i = 0; i < obs.data.size(); ++i) out[i] = static_cast<T>(obs.data[i]) / T{255};
}

template <typename T>
std::vector<T> encode_observation(const grid::Observation& obs) {
  std::vector<T> out;
  encode_observation_into(obs, out);
  return out;
}

// All nine architectures share one engine: per-slot input layers, one LSTM
// per agent (or one centralized trunk), and dueling heads, with concatenation
// points for the low-level (before the LSTM) and high-level (before the
// dueling layer) channels. Weight sharing aliases every agent to index 0.
template <typename T>
class PolicyNetwork {
 public:
  PolicyNetwork(const AgentSpec& spec, std::uint64_t seed);

  const AgentSpec& spec() const { return spec_; }
  int num_agents() const { return kNumAgents; }
  // Number of recurrent states (not unique LSTM modules).
  int num_cores() const { return spec_.centralized ? 1 : kNumAgents; }
  int num_heads() const { return static_cast<int>(head_of_output_.size()); }
  bool combinatorial() const { return spec_.combinatorial(); }
  std::size_t input_width() const { return first_.front().in_features(); }
  std::size_t core_input_width() const { return cores_.front().in_features(); }
  std::size_t head_input_width() const { return heads_.front().in_features(); }
  std::size_t head_width() const { return heads_.front().num_actions(); }

  // Zero state for `batch` independent sequences.
  JointHidden<T> initial_hidden(std::size_t batch = 1) const;

  // One time step. `inputs` holds one encoded observation per agent slot
  // (B observations back to back for a batch of B sequences); `roles`
  // (default identity) selects each slot's one-hot role when role info is
  // enabled. Advances `hidden`. Fills `cache` when non-null.
  QOutput<T> forward(std::span<const std::vector<T>> inputs, JointHidden<T>& hidden,
                     StepCache<T>* cache = nullptr, std::span<const int> roles = {}) const;
  // Same as forward, writing into `out` (reshaped as needed) and `cache`.
  void forward_into(std::span<const std::vector<T>> inputs, JointHidden<T>& hidden,
                    QOutput<T>& out, StepCache<T>& cache, std::span<const int> roles = {}) const;

  // Truncated BPTT over a cached unroll. dq[t] has the shape of the step-t
  // output and holds dLoss/dQ. The gradient entering the first step's
  // recurrent state is dropped. Accumulates into parameter gradients.
  void backward(std::span<const StepCache<T>> caches, std::span<const QOutput<T>> dq);

  nn::ParamList<T> parameters();
  std::vector<const nn::BasicParam<T>*> parameters() const;
  void zero_grad();
  void zero_parameters();

  template <typename U>
  void copy_parameters_from(const PolicyNetwork<U>& other) {
    nn::copy_values<T, U>(parameters(), other.parameters());
  }

 private:
  void shape_output(QOutput<T>& q, std::size_t batch) const;

  AgentSpec spec_;
  std::vector<nn::Linear<T>> first_;
  std::vector<nn::LstmCell<T>> cores_;
  std::vector<nn::DuelingHead<T>> heads_;
  std::vector<int> first_of_slot_;
  std::vector<int> core_of_agent_;  // empty when centralized
  std::vector<int> head_of_output_;
  std::vector<std::vector<int>> core_src_;  // slots feeding each core, own first
  std::vector<std::vector<int>> head_src_;  // cores feeding each head, own first

  // backward scratch
  std::vector<std::vector<T>> dh_next_, dc_next_, ds_, dh_, du_, dpost_;
  std::vector<T> dv_, dpre_, dh_prev_, dc_prev_;
};

extern template class PolicyNetwork<float>;
extern template class PolicyNetwork<double>;
extern template class PolicyNetwork<long double>;

}  // namespace vdn::agents
