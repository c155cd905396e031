#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vdn/harness/experiment.hpp"
#include "vdn/harness/metrics.hpp"

namespace vdn::harness {

// Decimal with 9 significant digits.
std::string format_number(double value);

// curves: task,architecture,seed,episode,reward (episode counts from 1)
void write_curves(const std::filesystem::path& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_curves(const std::filesystem::path& path);

// bands: task,architecture,episode,mean,lower,upper
void write_bands(const std::filesystem::path& path, const TaskSummary& summary);

// summary: task,architecture,auc_norm,final_norm,final_raw_mean,final_ci90
struct SummaryRow {
  std::string task;
  int architecture = 0;
  double auc_norm = 0.0, final_norm = 0.0, final_raw_mean = 0.0, final_ci90 = 0.0;
  bool operator==(const SummaryRow&) const = default;
};
void write_summary(const std::filesystem::path& path, const std::vector<TaskSummary>& tasks);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

// Single-series helpers for per-run files: header line, then one value per
// line.
void write_series(const std::filesystem::path& path, const std::string& header,
                  const std::vector<double>& values);
std::vector<double> read_series(const std::filesystem::path& path);

// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace vdn::harness
