#include "vdn/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "vdn/nn/adam.hpp"

namespace vdn::train {

using agents::PolicyNetwork;
using agents::QOutput;

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid trainer config: " + what); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must be in [0, 1]");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (segment_len < 1) fail("segment_len must be >= 1");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must be in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) fail("epsilon_end must be in [0, 1]");
  if (epsilon_decay_steps < 0) fail("epsilon_decay_steps must be >= 0");
  if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (target_sync_steps < 1) fail("target_sync_steps must be >= 1");
  if (warmup_segments < 0) fail("warmup_segments must be >= 0");
  if (train_every < 1) fail("train_every must be >= 1");
  if (episodes < 1) fail("episodes must be >= 1");
  if (eval_period < 0) fail("eval_period must be >= 0");
  if (train_episode_limit < 1 || test_episode_limit < 1) fail("episode limits must be >= 1");
}

std::int64_t TrainConfig::decay_steps() const {
  if (epsilon_decay_steps > 0) return epsilon_decay_steps;
  const double total = static_cast<double>(episodes) * train_episode_limit;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(epsilon_decay_fraction * total)));
}

double epsilon_at(std::int64_t step, const TrainConfig& config) {
  const std::int64_t decay = config.decay_steps();
  if (step >= decay) return config.epsilon_end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay);
  return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

namespace {

std::vector<std::vector<float>> encode(std::span<const grid::Observation> obs) {
  std::vector<std::vector<float>> out;
  out.reserve(obs.size());
  for (const auto& o : obs) out.push_back(agents::encode_observation<float>(o));
  return out;
}

// Encodes every step's observations plus the bootstrap observation, one
// column per segment. Returns the common step count.
template <typename T>
std::size_t encode_batch(std::span<const TrajectorySegment* const> batch, Workspace<T>& ws) {
  if (batch.empty()) throw UsageError("empty segment batch");
  const std::size_t n = batch.front()->observations.size();
  const std::size_t B = batch.size();
  const std::size_t width = agents::kObsInput;
  ws.inputs.resize(n + 1);
  for (std::size_t t = 0; t <= n; ++t) {
    ws.inputs[t].resize(agents::kNumAgents);
    for (auto& v : ws.inputs[t]) v.resize(width * B);
  }
  for (std::size_t b = 0; b < B; ++b) {
    const auto& seg = *batch[b];
    if (seg.observations.size() != n || seg.team_rewards.size() != n ||
        seg.terminal.size() != n) {
      throw UsageError("segments in one batch must have the same number of steps");
    }
    for (std::size_t t = 0; t <= n; ++t) {
      const auto& obs = t < n ? seg.observations[t] : seg.bootstrap_obs;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        T* col = ws.inputs[t][i].data() + b * width;
        for (std::size_t k = 0; k < width; ++k) col[k] = static_cast<T>(obs[i].data[k]) / T{255};
      }
    }
  }
  return n;
}

// Stored initial states of the segments, one column each.
template <typename T>
agents::JointHidden<T> stack_hidden(const PolicyNetwork<T>& net,
                                    std::span<const TrajectorySegment* const> batch) {
  const std::size_t H = agents::kHidden;
  auto hidden = net.initial_hidden(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& init = batch[b]->initial_hidden;
    if (init.cores.size() != hidden.cores.size()) {
      throw UsageError("segment hidden state does not match the network");
    }
    for (std::size_t k = 0; k < hidden.cores.size(); ++k) {
      std::copy_n(init.cores[k].h.begin(), H, hidden.cores[k].h.begin() + static_cast<std::ptrdiff_t>(b * H));
      std::copy_n(init.cores[k].c.begin(), H, hidden.cores[k].c.begin() + static_cast<std::ptrdiff_t>(b * H));
    }
  }
  return hidden;
}

}  // namespace

Rollout start_rollout(std::shared_ptr<const grid::GridMap> map, std::uint64_t seed,
                      grid::Mode mode, int episode_limit, const PolicyNetwork<float>& net) {
  auto r = grid::reset(std::move(map), seed, mode, episode_limit);
  Rollout rollout;
  rollout.env = std::move(r.state);
  rollout.obs = std::move(r.observations);
  rollout.hidden = net.initial_hidden();
  return rollout;
}

TrajectorySegment collect(Rollout& rollout, const PolicyNetwork<float>& net, double epsilon,
                          std::mt19937_64& rng, int length) {
  if (rollout.env.done()) throw UsageError("collect called on a finished episode");
  TrajectorySegment seg;
  seg.initial_hidden = rollout.hidden;
  seg.observations.reserve(static_cast<std::size_t>(length));
  rollout.events.clear();
  const std::size_t agents_n = rollout.obs.size();
  std::vector<grid::Action> env_actions(agents_n);
  for (int t = 0; t < length; ++t) {
    if (rollout.env.done()) {
      seg.observations.push_back(rollout.obs);
      seg.actions.emplace_back(agents_n, 0);
      seg.team_rewards.push_back(0.0f);
      seg.terminal.push_back(1);
      continue;
    }
    const auto inputs = encode(rollout.obs);
    const auto q = net.forward(inputs, rollout.hidden);
    auto actions = agents::select_actions(q, epsilon, rng);
    for (std::size_t i = 0; i < agents_n; ++i) env_actions[i] = static_cast<grid::Action>(actions[i]);
    auto result = grid::step(rollout.env, env_actions);

    seg.observations.push_back(rollout.obs);
    seg.actions.push_back(std::move(actions));
    seg.team_rewards.push_back(static_cast<float>(result.team_reward));
    seg.terminal.push_back(result.done ? 1 : 0);
    ++seg.length;
    rollout.episode_reward += result.team_reward;
    rollout.events.insert(rollout.events.end(), result.events.begin(), result.events.end());
    rollout.obs = std::move(result.observations);
  }
  seg.bootstrap_obs = rollout.obs;
  return seg;
}

std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> bootstrap, double gamma,
                                   double lambda, std::span<const std::uint8_t> terminal) {
  const std::size_t n = rewards.size();
  if (bootstrap.size() != n || (!terminal.empty() && terminal.size() != n)) {
    throw ConfigError("lambda_returns: rewards, bootstrap and terminal lengths differ");
  }
  std::vector<double> g(n);
  for (std::size_t t = n; t-- > 0;) {
    if (!terminal.empty() && terminal[t]) {
      g[t] = rewards[t];
    } else if (t + 1 == n) {
      g[t] = rewards[t] + gamma * bootstrap[t];
    } else {
      g[t] = rewards[t] + gamma * ((1.0 - lambda) * bootstrap[t] + lambda * g[t + 1]);
    }
  }
  return g;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(TrajectorySegment segment) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(segment));
  } else {
    items_[next_] = std::move(segment);
  }
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::sample_index() {
  if (items_.empty()) throw UsageError("sampling from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  return pick(rng_);
}

std::vector<const TrajectorySegment*> ReplayBuffer::sample(std::size_t count) {
  std::vector<const TrajectorySegment*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(&items_[sample_index()]);
  return out;
}

template <typename T>
BatchTargets batch_targets(const PolicyNetwork<T>& target,
                           std::span<const TrajectorySegment* const> batch,
                           const TrainConfig& config, Workspace<T>& ws) {
  const std::size_t n = encode_batch(batch, ws);
  const std::size_t B = batch.size();
  const bool independent = target.spec().independent();
  const std::size_t series = independent ? static_cast<std::size_t>(target.num_agents()) : 1;
  // boot[(b * series + i) * n + t]
  ws.boot.assign(B * series * n, 0.0);

  auto hidden = stack_hidden(target, batch);
  QOutput<T>& q = ws.scratch_out;
  // Target outputs for inputs 1..n give the bootstrap of steps 0..n-1.
  target.forward_into(ws.inputs[0], hidden, q, ws.scratch_cache);
  for (std::size_t t = 0; t < n; ++t) {
    target.forward_into(ws.inputs[t + 1], hidden, q, ws.scratch_cache);
    for (std::size_t b = 0; b < B; ++b) {
      if (batch[b]->terminal[t]) continue;
      if (independent) {
        for (std::size_t i = 0; i < series; ++i) {
          const auto head = q.agent(static_cast<int>(i), b);
          ws.boot[(b * series + i) * n + t] =
              static_cast<double>(head[static_cast<std::size_t>(agents::argmax<T>(head))]);
        }
      } else {
        ws.boot[b * n + t] = static_cast<double>(agents::max_joint_q(q, b));
      }
    }
  }

  BatchTargets out(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& seg = *batch[b];
    ws.rewards.assign(seg.team_rewards.begin(), seg.team_rewards.end());
    for (std::size_t i = 0; i < series; ++i) {
      const std::span<const double> boot(ws.boot.data() + (b * series + i) * n, n);
      out[b].push_back(lambda_returns(ws.rewards, boot, config.gamma, config.lambda, seg.terminal));
    }
  }
  return out;
}

template <typename T>
SegmentLoss batch_loss(PolicyNetwork<T>& net, std::span<const TrajectorySegment* const> batch,
                       const BatchTargets& targets, double scale, bool accumulate,
                       Workspace<T>& ws) {
  const std::size_t n = encode_batch(batch, ws);
  const std::size_t B = batch.size();
  if (targets.size() != B) throw UsageError("one target set per segment required");
  const bool independent = net.spec().independent();
  ws.caches.resize(n);
  ws.outputs.resize(n);
  ws.dq.resize(n);

  auto hidden = stack_hidden(net, batch);
  SegmentLoss loss;
  for (std::size_t t = 0; t < n; ++t) {
    const QOutput<T>& out = ws.outputs[t];
    net.forward_into(ws.inputs[t], hidden, ws.outputs[t], ws.caches[t]);
    auto& dq = ws.dq[t];
    dq.combinatorial = out.combinatorial;
    dq.batch = B;
    dq.heads.resize(out.heads.size());
    for (std::size_t j = 0; j < dq.heads.size(); ++j) dq.heads[j].assign(out.heads[j].size(), T{0});
    const std::size_t width = out.width();
    for (std::size_t b = 0; b < B; ++b) {
      const auto& seg = *batch[b];
      if (static_cast<int>(t) >= seg.length) continue;
      const auto& actions = seg.actions[t];
      if (independent) {
        for (std::size_t i = 0; i < dq.heads.size(); ++i) {
          const std::size_t at = b * width + static_cast<std::size_t>(actions[i]);
          const double td = targets[b][i][t] - static_cast<double>(out.heads[i][at]);
          loss.sum_sq_td += td * td;
          ++loss.count;
          dq.heads[i][at] = static_cast<T>(-scale * td);
        }
      } else {
        const double td = targets[b][0][t] - static_cast<double>(agents::joint_q(out, actions, b));
        loss.sum_sq_td += td * td;
        ++loss.count;
        const T g = static_cast<T>(-scale * td);
        if (dq.combinatorial) {
          dq.heads[0][b * width + static_cast<std::size_t>(agents::encode_joint(actions))] = g;
        } else {
          for (std::size_t i = 0; i < dq.heads.size(); ++i) {
            dq.heads[i][b * width + static_cast<std::size_t>(actions[i])] = g;
          }
        }
      }
    }
  }
  if (accumulate) net.backward(ws.caches, ws.dq);
  return loss;
}

double train_step(PolicyNetwork<float>& net, const PolicyNetwork<float>& target,
                  std::span<const TrajectorySegment* const> batch, const TrainConfig& config,
                  Workspace<float>& ws) {
  if (batch.empty()) throw UsageError("train_step needs a non-empty batch");
  net.zero_grad();
  const double scale = 1.0 / static_cast<double>(batch.size());
  const auto targets = batch_targets<float>(target, batch, config, ws);
  const auto l = batch_loss<float>(net, batch, targets, scale, true, ws);
  const double loss = l.count ? l.sum_sq_td / l.count : 0.0;
  if (!std::isfinite(loss)) {
    throw TrainingFault("non-finite training loss (" + std::to_string(loss) + ") for " +
                        net.spec().label());
  }
  nn::adam_step(net.parameters(), config.lr);
  return loss;
}

void sync_target(const PolicyNetwork<float>& net, PolicyNetwork<float>& target) {
  target.copy_parameters_from(net);
}

TrainerSeeds TrainerSeeds::derive(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedu};
  std::array<std::uint32_t, 8> words{};
  seq.generate(words.begin(), words.end());
  auto join = [&](int k) {
    return (static_cast<std::uint64_t>(words[static_cast<std::size_t>(2 * k)]) << 32) |
           words[static_cast<std::size_t>(2 * k + 1)];
  };
  // Evaluation gets its own sequence so adding it left the others unchanged.
  std::seed_seq eval_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xe7a1u};
  std::array<std::uint32_t, 2> eval_words{};
  eval_seq.generate(eval_words.begin(), eval_words.end());
  return {join(0), join(1), join(2), join(3), (static_cast<std::uint64_t>(eval_words[0]) << 32) | eval_words[1]};
}

Trainer::Trainer(const agents::AgentSpec& spec, std::shared_ptr<const grid::GridMap> map,
                 TrainConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      map_(std::move(map)),
      net_(spec, TrainerSeeds::derive(seed).init),
      target_(net_),
      replay_(static_cast<std::size_t>(config_.buffer_capacity), TrainerSeeds::derive(seed).replay),
      env_seeds_(TrainerSeeds::derive(seed).env),
      explore_(TrainerSeeds::derive(seed).explore),
      eval_seeds_(TrainerSeeds::derive(seed).eval) {
  config_.validate();
}

double Trainer::run_training_episode() {
  auto rollout = start_rollout(map_, env_seeds_(), grid::Mode::Train,
                               config_.train_episode_limit, net_);
  while (!rollout.env.done()) {
    auto seg = collect(rollout, net_, epsilon_at(env_steps_, config_), explore_,
                       config_.segment_len);
    env_steps_ += seg.length;
    replay_.add(std::move(seg));
    ++segments_;
    if (segments_ >= config_.warmup_segments && segments_ % config_.train_every == 0) {
      const auto batch = replay_.sample(static_cast<std::size_t>(config_.batch_size));
      last_loss_ = train_step(net_, target_, batch, config_, ws_);
      ++gradient_steps_;
    }
    while (target_syncs_ < env_steps_ / config_.target_sync_steps) {
      sync_target(net_, target_);
      ++target_syncs_;
    }
  }
  return rollout.episode_reward;
}

double Trainer::run_evaluation_episode() {
  const std::uint64_t seed = eval_seeds_();
  auto rollout = start_rollout(map_, seed, grid::Mode::Test, config_.test_episode_limit, net_);
  std::mt19937_64 rng(seed);
  while (!rollout.env.done()) collect(rollout, net_, 0.0, rng, config_.segment_len);
  return rollout.episode_reward;
}

template BatchTargets batch_targets<float>(const PolicyNetwork<float>&,
                                           std::span<const TrajectorySegment* const>,
                                           const TrainConfig&, Workspace<float>&);
template BatchTargets batch_targets<double>(const PolicyNetwork<double>&,
                                            std::span<const TrajectorySegment* const>,
                                            const TrainConfig&, Workspace<double>&);
template SegmentLoss batch_loss<float>(PolicyNetwork<float>&,
                                       std::span<const TrajectorySegment* const>,
                                       const BatchTargets&, double, bool, Workspace<float>&);
template SegmentLoss batch_loss<double>(PolicyNetwork<double>&,
                                        std::span<const TrajectorySegment* const>,
                                        const BatchTargets&, double, bool, Workspace<double>&);
template SegmentLoss batch_loss<long double>(PolicyNetwork<long double>&,
                                             std::span<const TrajectorySegment* const>,
                                             const BatchTargets&, double, bool,
                                             Workspace<long double>&);

}  // namespace vdn::train
