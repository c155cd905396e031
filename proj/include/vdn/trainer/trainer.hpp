#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "vdn/agents/network.hpp"
#include "vdn/agents/policy.hpp"
#include "vdn/gridworld/gridworld.hpp"

namespace vdn::train {

struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.9;
  int segment_len = 8;
  double lr = 1e-4;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  // Linear decay length in env steps; 0 means epsilon_decay_fraction of all
  // training steps (episodes * train_episode_limit).
  std::int64_t epsilon_decay_steps = 0;
  double epsilon_decay_fraction = 0.1;
  int buffer_capacity = 5000;   // segments
  int batch_size = 32;          // segments
  int target_sync_steps = 2500; // env steps
  int warmup_segments = 500;
  int train_every = 1;          // collected segments per gradient step
  int episodes = 50000;
  int eval_period = 250;        // training episodes between greedy test episodes; 0 disables
  int train_episode_limit = grid::kTrainEpisodeLimit;
  int test_episode_limit = grid::kTestEpisodeLimit;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
  std::int64_t decay_steps() const;
};

// Linear from epsilon_start to epsilon_end over decay_steps(), then flat.
double epsilon_at(std::int64_t step, const TrainConfig& config);

struct TrajectorySegment {
  std::vector<std::vector<grid::Observation>> observations;  // [step][agent]
  std::vector<std::vector<int>> actions;                      // [step][agent]
  std::vector<float> team_rewards;
  std::vector<std::uint8_t> terminal;  // episode ended at this step, or padding
  int length = 0;                      // real steps; the rest is padding
  std::vector<grid::Observation> bootstrap_obs;
  agents::JointHidden<float> initial_hidden;
};

// Live episode: environment, latest observations and the acting network's
// recurrent state.
struct Rollout {
  grid::EnvState env;
  std::vector<grid::Observation> obs;
  agents::JointHidden<float> hidden;
  double episode_reward = 0.0;
  std::vector<grid::RewardEvent> events;  // of the last collected segment
};

Rollout start_rollout(std::shared_ptr<const grid::GridMap> map, std::uint64_t seed,
                      grid::Mode mode, int episode_limit,
                      const agents::PolicyNetwork<float>& net);

// Plays up to `length` steps with epsilon-greedy actions. If the episode ends
// early the remaining steps are padded (terminal, zero reward).
TrajectorySegment collect(Rollout& rollout, const agents::PolicyNetwork<float>& net,
                          double epsilon, std::mt19937_64& rng, int length);

// Forward-view lambda-return within a segment:
//   G[n-1] = r[n-1] + gamma * bootstrap[n-1]
//   G[t]   = r[t] + gamma * ((1 - lambda) * bootstrap[t] + lambda * G[t+1])
// A terminal step cuts the recursion (G[t] = r[t]). bootstrap[t] is the value
// of the state after step t.
std::vector<double> lambda_returns(std::span<const double> rewards,
                                   std::span<const double> bootstrap, double gamma,
                                   double lambda, std::span<const std::uint8_t> terminal = {});

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void add(TrajectorySegment segment);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Uniform with replacement.
  std::size_t sample_index();
  std::vector<const TrajectorySegment*> sample(std::size_t count);
  const TrajectorySegment& at(std::size_t i) const { return items_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<TrajectorySegment> items_;
  std::mt19937_64 rng_;
};

// Reusable per-network scratch for loss evaluation.
template <typename T>
struct Workspace {
  // [step][agent], one column per segment; the bootstrap step is last.
  std::vector<std::vector<std::vector<T>>> inputs;
  std::vector<agents::StepCache<T>> caches;
  std::vector<agents::QOutput<T>> outputs;
  std::vector<agents::QOutput<T>> dq;
  agents::StepCache<T> scratch_cache;
  agents::QOutput<T> scratch_out;
  std::vector<double> rewards, boot;
};

struct SegmentLoss {
  double sum_sq_td = 0.0;  // sum over real steps (and agents, for independent learners)
  int count = 0;
};

// Targets per segment: [segment][series][step].
using BatchTargets = std::vector<std::vector<std::vector<double>>>;

// TD targets from the target network: lambda-returns over the stored rewards
// with max-joint-Q bootstraps. Independent learners get one target series
// per agent; other specs a single series. All segments must have the same
// number of steps; they are unrolled together as one batch.
template <typename T>
BatchTargets batch_targets(const agents::PolicyNetwork<T>& target,
                           std::span<const TrajectorySegment* const> batch,
                           const TrainConfig& config, Workspace<T>& ws);

// Loss 0.5 * scale * sum(td^2) over the batch for fixed targets; accumulates
// its gradient into the network's parameter gradients when `accumulate` is
// set.
template <typename T>
SegmentLoss batch_loss(agents::PolicyNetwork<T>& net,
                       std::span<const TrajectorySegment* const> batch,
                       const BatchTargets& targets, double scale, bool accumulate,
                       Workspace<T>& ws);

// Single-segment forms of the above ([series][step] targets).
template <typename T>
std::vector<std::vector<double>> segment_targets(const agents::PolicyNetwork<T>& target,
                                                 const TrajectorySegment& segment,
                                                 const TrainConfig& config) {
  Workspace<T> ws;
  const TrajectorySegment* one[] = {&segment};
  return batch_targets<T>(target, one, config, ws).front();
}

template <typename T>
SegmentLoss segment_loss(agents::PolicyNetwork<T>& net, const TrajectorySegment& segment,
                         const std::vector<std::vector<double>>& targets, double scale,
                         bool accumulate, Workspace<T>& ws) {
  const TrajectorySegment* one[] = {&segment};
  return batch_loss<T>(net, one, BatchTargets{targets}, scale, accumulate, ws);
}

// One Adam update on the mean over the batch of 0.5 * sum_t td_t^2. Returns
// the mean squared TD error over real steps. Throws TrainingFault on a
// non-finite loss.
double train_step(agents::PolicyNetwork<float>& net, const agents::PolicyNetwork<float>& target,
                  std::span<const TrajectorySegment* const> batch, const TrainConfig& config,
                  Workspace<float>& ws);

void sync_target(const agents::PolicyNetwork<float>& net, agents::PolicyNetwork<float>& target);

struct TrainerSeeds {
  std::uint64_t init, env, explore, replay, eval;
  static TrainerSeeds derive(std::uint64_t seed);
};

// One learning run: owns the online/target networks, replay and RNG streams.
class Trainer {
 public:
  Trainer(const agents::AgentSpec& spec, std::shared_ptr<const grid::GridMap> map,
          TrainConfig config, std::uint64_t seed);

  // Cumulative team reward of one full training episode.
  double run_training_episode();
  // Greedy episode with the test step limit.
  double run_evaluation_episode();

  const agents::PolicyNetwork<float>& network() const { return net_; }
  agents::PolicyNetwork<float>& network() { return net_; }
  const agents::PolicyNetwork<float>& target() const { return target_; }
  const TrainConfig& config() const { return config_; }

  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t gradient_steps() const { return gradient_steps_; }
  std::int64_t target_syncs() const { return target_syncs_; }
  std::int64_t segments_collected() const { return segments_; }
  double last_loss() const { return last_loss_; }

 private:
  TrainConfig config_;
  std::shared_ptr<const grid::GridMap> map_;
  agents::PolicyNetwork<float> net_;
  agents::PolicyNetwork<float> target_;
  ReplayBuffer replay_;
  std::mt19937_64 env_seeds_;
  std::mt19937_64 explore_;
  std::mt19937_64 eval_seeds_;
  Workspace<float> ws_;
  std::int64_t env_steps_ = 0;
  std::int64_t gradient_steps_ = 0;
  std::int64_t target_syncs_ = 0;
  std::int64_t segments_ = 0;
  double last_loss_ = 0.0;
};

}  // namespace vdn::train
