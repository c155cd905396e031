#include "vdn/agents/network.hpp"

#include <algorithm>
#include <array>

namespace vdn::agents {
namespace {

// Column b of dst is the concatenation of column b of each part (all parts
// have `rows` rows).
template <typename T>
void stack_columns(std::vector<T>& dst, std::span<const std::vector<T>* const> parts,
                   std::size_t rows, std::size_t batch) {
  const std::size_t width = rows * parts.size();
  dst.resize(width * batch);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      std::copy_n(parts[p]->data() + b * rows, rows, dst.data() + b * width + p * rows);
    }
  }
}

// Inverse of stack_columns for gradients: adds each block into its part.
template <typename T>
void unstack_add(std::span<const T> src, std::span<std::vector<T>* const> parts,
                 std::size_t rows, std::size_t batch) {
  const std::size_t width = rows * parts.size();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const T* from = src.data() + b * width + p * rows;
      T* to = parts[p]->data() + b * rows;
      for (std::size_t k = 0; k < rows; ++k) to[k] += from[k];
    }
  }
}

}  // namespace

template <typename T>
PolicyNetwork<T>::PolicyNetwork(const AgentSpec& spec, std::uint64_t seed)
    : spec_(validate_spec(spec, true)) {
  const std::size_t in = kObsInput + (spec_.role_info ? kNumAgents : 0);
  const std::size_t H = kHidden;
  const bool shared = spec_.shared_weights;

  if (spec_.centralized) {
    // Each observation has its own input layer; one trunk LSTM over the concatenation.
    for (int s = 0; s < kNumAgents; ++s) {
      first_.emplace_back("input" + std::to_string(s), in, H);
      first_of_slot_.push_back(s);
    }
    cores_.emplace_back("lstm", kNumAgents * H, H);
    if (spec_.value_decomposition) {
      for (int a = 0; a < kNumAgents; ++a) {
        heads_.emplace_back("head" + std::to_string(a), H, kNumActions);
        head_of_output_.push_back(a);
      }
    } else {
      heads_.emplace_back("head", H, kJointActions);
      head_of_output_.push_back(0);
    }
  } else {
    const std::size_t core_in = spec_.low_comm ? kNumAgents * H : H;
    const std::size_t head_in = spec_.high_comm ? kNumAgents * H : H;
    const int unique = shared ? 1 : kNumAgents;
    for (int a = 0; a < unique; ++a) {
      const std::string suffix = shared ? "" : std::to_string(a);
      first_.emplace_back("input" + suffix, in, H);
      cores_.emplace_back("lstm" + suffix, core_in, H);
      heads_.emplace_back("head" + suffix, head_in, kNumActions);
    }
    for (int a = 0; a < kNumAgents; ++a) {
      const int idx = shared ? 0 : a;
      first_of_slot_.push_back(idx);
      core_of_agent_.push_back(idx);
      head_of_output_.push_back(idx);
    }
  }

  // Concatenation order: own slot (core) first, then the others.
  for (int k = 0; k < num_cores(); ++k) {
    std::vector<int> src;
    if (spec_.centralized) {
      for (int s = 0; s < kNumAgents; ++s) src.push_back(s);
    } else {
      src.push_back(k);
      for (int s = 0; s < kNumAgents && spec_.low_comm; ++s) {
        if (s != k) src.push_back(s);
      }
    }
    core_src_.push_back(std::move(src));
  }
  for (int j = 0; j < num_heads(); ++j) {
    std::vector<int> src;
    if (spec_.centralized) {
      src.push_back(0);
    } else {
      src.push_back(j);
      for (int k = 0; k < num_cores() && spec_.high_comm; ++k) {
        if (k != j) src.push_back(k);
      }
    }
    head_src_.push_back(std::move(src));
  }

  nn::Rng rng(seed);
  for (auto& l : first_) l.init(rng);
  for (auto& c : cores_) c.init(rng);
  for (auto& h : heads_) h.init(rng);
}

template <typename T>
JointHidden<T> PolicyNetwork<T>::initial_hidden(std::size_t batch) const {
  JointHidden<T> h;
  h.cores.assign(static_cast<std::size_t>(num_cores()), nn::LstmState<T>(kHidden * batch));
  return h;
}

template <typename T>
void PolicyNetwork<T>::shape_output(QOutput<T>& q, std::size_t batch) const {
  q.combinatorial = combinatorial();
  q.batch = batch;
  q.heads.resize(head_of_output_.size());
  for (std::size_t j = 0; j < head_of_output_.size(); ++j) {
    q.heads[j].resize(heads_[static_cast<std::size_t>(head_of_output_[j])].num_actions() * batch);
  }
}

template <typename T>
QOutput<T> PolicyNetwork<T>::forward(std::span<const std::vector<T>> inputs,
                                     JointHidden<T>& hidden, StepCache<T>* cache,
                                     std::span<const int> roles) const {
  QOutput<T> q;
  if (cache) {
    forward_into(inputs, hidden, q, *cache, roles);
  } else {
    StepCache<T> local;
    forward_into(inputs, hidden, q, local, roles);
  }
  return q;
}

template <typename T>
void PolicyNetwork<T>::forward_into(std::span<const std::vector<T>> inputs,
                                    JointHidden<T>& hidden, QOutput<T>& q, StepCache<T>& c,
                                    std::span<const int> roles) const {
  const std::size_t slots = kNumAgents;
  const std::size_t H = kHidden;
  if (inputs.size() != slots) {
    throw ConfigError("network expects " + std::to_string(slots) + " observations, got " +
                      std::to_string(inputs.size()));
  }
  if (hidden.cores.size() != static_cast<std::size_t>(num_cores())) {
    throw ConfigError("hidden state has " + std::to_string(hidden.cores.size()) +
                      " cores, network has " + std::to_string(num_cores()));
  }
  if (!roles.empty() && roles.size() != slots) throw ConfigError("roles must have one entry per agent");
  const std::size_t batch = inputs[0].size() / kObsInput;
  for (std::size_t s = 0; s < slots; ++s) {
    if (inputs[s].empty() || inputs[s].size() != kObsInput * batch) {
      throw ConfigError("observation " + std::to_string(s) + " has " +
                        std::to_string(inputs[s].size()) + " values, expected " +
                        std::to_string(kObsInput) + " per batch entry");
    }
  }
  for (const auto& core : hidden.cores) {
    if (core.h.size() != H * batch) {
      throw ConfigError("hidden state holds " + std::to_string(core.h.size() / H) +
                        " batch entries, inputs hold " + std::to_string(batch));
    }
  }
  c.batch = batch;

  const std::size_t in = input_width();
  c.input.resize(slots);
  c.first_pre.resize(slots);
  c.first_post.resize(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    auto& x = c.input[s];
    if (spec_.role_info) {
      const int role = roles.empty() ? static_cast<int>(s) : roles[s];
      x.resize(in * batch);
      for (std::size_t b = 0; b < batch; ++b) {
        T* col = x.data() + b * in;
        std::copy_n(inputs[s].data() + b * kObsInput, kObsInput, col);
        for (int r = 0; r < kNumAgents; ++r) col[kObsInput + static_cast<std::size_t>(r)] = r == role ? T{1} : T{0};
      }
    } else {
      x.assign(inputs[s].begin(), inputs[s].end());
    }
    const auto& layer = first_[static_cast<std::size_t>(first_of_slot_[s])];
    c.first_pre[s].resize(H * batch);
    c.first_post[s].resize(H * batch);
    layer.forward(x, c.first_pre[s]);
    nn::relu<T>(c.first_pre[s], c.first_post[s]);
  }

  const std::size_t cores = static_cast<std::size_t>(num_cores());
  c.core_in.resize(cores);
  c.lstm.resize(cores);
  c.core_h.resize(cores);
  c.core_post.resize(cores);
  std::array<const std::vector<T>*, kNumAgents> parts{};
  for (std::size_t k = 0; k < cores; ++k) {
    const auto& src = core_src_[k];
    for (std::size_t p = 0; p < src.size(); ++p) parts[p] = &c.first_post[static_cast<std::size_t>(src[p])];
    stack_columns<T>(c.core_in[k], std::span(parts).first(src.size()), H, batch);
    const auto& cell = cores_[spec_.centralized ? 0 : static_cast<std::size_t>(core_of_agent_[k])];
    auto& state = hidden.cores[k];
    cell.forward(c.core_in[k], state, state, c.lstm[k]);
    c.core_h[k].assign(state.h.begin(), state.h.end());
    c.core_post[k].resize(H * batch);
    nn::relu<T>(state.h, c.core_post[k]);
    if (!state.all_finite()) {
      throw TrainingFault("non-finite LSTM state in core " + std::to_string(k));
    }
  }

  shape_output(q, batch);
  c.head_in.resize(q.heads.size());
  for (std::size_t j = 0; j < q.heads.size(); ++j) {
    const auto& src = head_src_[j];
    for (std::size_t p = 0; p < src.size(); ++p) parts[p] = &c.core_post[static_cast<std::size_t>(src[p])];
    stack_columns<T>(c.head_in[j], std::span(parts).first(src.size()), H, batch);
    heads_[static_cast<std::size_t>(head_of_output_[j])].forward(c.head_in[j], q.heads[j]);
  }
}

template <typename T>
void PolicyNetwork<T>::backward(std::span<const StepCache<T>> caches,
                                std::span<const QOutput<T>> dq) {
  if (caches.empty()) throw UsageError("backward called without a forward cache");
  if (dq.size() != caches.size()) {
    throw UsageError("backward needs one output gradient per cached step");
  }
  const std::size_t H = kHidden;
  const std::size_t slots = kNumAgents;
  const std::size_t cores = static_cast<std::size_t>(num_cores());
  const std::size_t batch = caches.front().batch;
  const std::size_t HB = H * batch;
  dh_next_.assign(cores, std::vector<T>(HB, T{0}));
  dc_next_.assign(cores, std::vector<T>(HB, T{0}));
  ds_.resize(cores);
  dh_.resize(cores);
  du_.resize(cores);
  dpost_.resize(slots);
  dh_prev_.resize(HB);
  dc_prev_.resize(HB);
  dpre_.resize(HB);
  std::array<std::vector<T>*, kNumAgents> parts{};

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache<T>& c = caches[t];
    if (c.lstm.size() != cores || c.head_in.size() != dq[t].heads.size() || c.batch != batch) {
      throw UsageError("forward cache is missing or does not match this network");
    }
    for (auto& v : ds_) v.assign(HB, T{0});

    for (std::size_t j = 0; j < dq[t].heads.size(); ++j) {
      dv_.assign(c.head_in[j].size(), T{0});
      heads_[static_cast<std::size_t>(head_of_output_[j])].backward(c.head_in[j], dq[t].heads[j], dv_);
      const auto& src = head_src_[j];
      for (std::size_t p = 0; p < src.size(); ++p) parts[p] = &ds_[static_cast<std::size_t>(src[p])];
      unstack_add<T>(dv_, std::span(parts).first(src.size()), H, batch);
    }

    for (auto& v : dpost_) v.assign(HB, T{0});
    for (std::size_t k = 0; k < cores; ++k) {
      dh_[k].resize(HB);
      nn::relu_backward<T>(c.core_h[k], ds_[k], dh_[k]);
      for (std::size_t n = 0; n < HB; ++n) dh_[k][n] += dh_next_[k][n];
      du_[k].assign(c.core_in[k].size(), T{0});
      auto& cell = cores_[spec_.centralized ? 0 : static_cast<std::size_t>(core_of_agent_[k])];
      cell.backward(c.lstm[k], dh_[k], dc_next_[k], du_[k], dh_prev_, dc_prev_);
      dh_next_[k].swap(dh_prev_);
      dc_next_[k].swap(dc_prev_);

      const auto& src = core_src_[k];
      for (std::size_t p = 0; p < src.size(); ++p) parts[p] = &dpost_[static_cast<std::size_t>(src[p])];
      unstack_add<T>(du_[k], std::span(parts).first(src.size()), H, batch);
    }

    for (std::size_t s = 0; s < slots; ++s) {
      nn::relu_backward<T>(c.first_pre[s], dpost_[s], dpre_);
      first_[static_cast<std::size_t>(first_of_slot_[s])].backward(c.input[s], dpre_, {});
    }
  }
}

template <typename T>
nn::ParamList<T> PolicyNetwork<T>::parameters() {
  nn::ParamList<T> out;
  for (auto& l : first_) l.collect(out);
  for (auto& c : cores_) c.collect(out);
  for (auto& h : heads_) h.collect(out);
  return out;
}

template <typename T>
std::vector<const nn::BasicParam<T>*> PolicyNetwork<T>::parameters() const {
  auto mutable_list = const_cast<PolicyNetwork*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

template <typename T>
void PolicyNetwork<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
void PolicyNetwork<T>::zero_parameters() {
  for (auto* p : parameters()) p->value.fill(T{0});
}

template class PolicyNetwork<float>;
template class PolicyNetwork<double>;
template class PolicyNetwork<long double>;

}  // namespace vdn::agents
