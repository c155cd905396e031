#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vdn/harness/config.hpp"

namespace vdn::harness {

struct RunRecord {
  int architecture = 0;
  std::string task;
  std::uint64_t seed = 0;
  std::vector<double> rewards;       // one per training episode
  std::vector<double> eval_rewards;  // one per evaluation episode
  double wall_seconds = 0.0;
  double cpu_seconds = 0.0;  // training thread only
  std::int64_t env_steps = 0;
  std::int64_t gradient_steps = 0;
  std::int64_t target_syncs = 0;
};

// out/runs/<task>/arch<N>/seed<S>
std::filesystem::path run_directory(const std::filesystem::path& out, const std::string& task,
                                    int architecture, std::uint64_t seed);

// Trains one (architecture, task, seed) run and persists rewards.csv,
// eval.csv, checkpoint.vdnc and metadata.txt into its run directory. The
// metadata is written last and marks the run complete.
RunRecord train_run(const ExperimentConfig& config, int architecture, const std::string& task,
                    std::uint64_t seed);

// Reads a completed run. Returns false if the run directory holds no
// completed run; throws ConfigError if it was produced with different
// training settings.
bool load_run(const ExperimentConfig& config, int architecture, const std::string& task,
              std::uint64_t seed, RunRecord& record);

struct RunEvent {
  int architecture;
  std::string task;
  std::uint64_t seed;
  bool resumed;
  const RunRecord* record;
};

// Runs (or resumes) every selected run with up to config.workers in
// parallel, then writes curves_<task>.csv, bands_<task>.csv, summary.csv and
// metadata.txt into config.out_dir. Outputs depend only on the completed
// runs, so an interrupted and resumed experiment produces identical files.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const std::function<void(const RunEvent&)>& progress = {});

// Aggregate outputs from completed records (also used by run_experiment).
void write_outputs(const ExperimentConfig& config, const std::vector<RunRecord>& records);

}  // namespace vdn::harness
