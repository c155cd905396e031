#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vdn/trainer/trainer.hpp"

namespace vdn::harness {

// The seven benchmark tasks, each backed by maps/<name>.txt.
const std::vector<std::string>& task_names();
bool is_task_name(const std::string& name);

struct ExperimentConfig {
  std::vector<int> architectures{3};
  std::vector<std::string> tasks{"switch_open"};
  std::vector<std::uint64_t> seeds{1};
  train::TrainConfig train;
  int final_window = 5000;  // episodes; clipped to the run length when larger
  int workers = 1;
  std::filesystem::path out_dir = "runs";
  std::filesystem::path maps_dir;  // empty: the maps shipped with the source tree

  // Throws ConfigError naming the offending field.
  void validate() const;
  std::filesystem::path map_path(const std::string& task) const;
};

// Flat key = value text with [experiment] and [trainer] sections; '#'
// starts a comment. Unknown keys and malformed values are ConfigErrors
// reporting "<source>:<line>:<column>".
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one key. `key` is either "section.name" or a bare name that is unique
// across sections. Throws ConfigError on unknown keys or bad values.
void set_value(ExperimentConfig& config, const std::string& key, const std::string& value);

// Canonical text form: every key, one per line, in a fixed order. Parsing it
// back gives an equal configuration.
std::string format_config(const ExperimentConfig& config);

// Keys that change what a single run computes (everything except the run
// selection, worker count and directories).
std::string run_fingerprint(const train::TrainConfig& config);

// "1,3,9" / "all"; "switch_open,fetch_open" / "all"; "5" (seeds 1..5) or
// "1,7,9".
std::vector<int> parse_architectures(const std::string& text);
std::vector<std::string> parse_tasks(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace vdn::harness
