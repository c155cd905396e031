#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace vdn::harness {

// Area under a curve sampled at unit spacing (one point per episode).
double trapezoid_auc(std::span<const double> curve);

// Mean over the last `window` points. Throws ConfigError if the window is
// empty or longer than the series.
double final_mean(std::span<const double> series, std::size_t window);

// Half-width of the two-sided 90% confidence interval of the mean, from the
// t-distribution with n-1 degrees of freedom. Zero for fewer than 2 samples.
double ci90_half_width(std::span<const double> samples);

// Pointwise mean of equally long series. Throws ConfigError on mismatched
// lengths.
std::vector<double> mean_curve(const std::vector<std::vector<double>>& series);

struct Band {
  std::vector<double> mean, lower, upper;
};

Band confidence_band(const std::vector<std::vector<double>>& series);

// Per-task normalization of one score per architecture: if the smallest
// score is negative every score is shifted up by it, then all are divided by
// the largest. When every shifted score is zero all get 1.
std::map<int, double> normalize(const std::map<int, double>& raw);

struct ArchitectureSummary {
  int architecture = 0;
  std::vector<double> mean, lower, upper;  // seed-mean curve and 90% band
  double auc = 0.0;                        // of the seed-mean curve
  double auc_norm = 0.0;
  double final_raw_mean = 0.0;  // last-window mean, averaged over seeds
  double final_ci90 = 0.0;      // across per-seed final means
  double final_norm = 0.0;
  std::size_t seeds = 0;
};

struct TaskSummary {
  std::string task;
  std::size_t episodes = 0;
  std::size_t window = 0;
  std::vector<ArchitectureSummary> architectures;  // ascending preset number
};

// series[architecture] holds one reward curve per seed. All curves of a task
// must share a length; `window` is clipped to it.
TaskSummary summarize_task(const std::string& task,
                           const std::map<int, std::vector<std::vector<double>>>& series,
                           std::size_t window);

}  // namespace vdn::harness
