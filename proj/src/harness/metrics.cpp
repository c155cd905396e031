#include "vdn/harness/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "vdn/nn/errors.hpp"

namespace vdn::harness {

double trapezoid_auc(std::span<const double> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += 0.5 * (curve[i - 1] + curve[i]);
  return area;
}

double final_mean(std::span<const double> series, std::size_t window) {
  if (window == 0 || window > series.size()) {
    throw ConfigError("final window of " + std::to_string(window) + " episodes does not fit a series of " +
                      std::to_string(series.size()));
  }
  const auto tail = series.subspan(series.size() - window);
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
}

double ci90_half_width(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : samples) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.95) * sd / std::sqrt(static_cast<double>(n));
}

std::vector<double> mean_curve(const std::vector<std::vector<double>>& series) {
  if (series.empty()) return {};
  const std::size_t len = series.front().size();
  std::vector<double> mean(len, 0.0);
  for (const auto& s : series) {
    if (s.size() != len) throw ConfigError("reward curves of one task differ in length");
    for (std::size_t i = 0; i < len; ++i) mean[i] += s[i];
  }
  for (auto& v : mean) v /= static_cast<double>(series.size());
  return mean;
}

Band confidence_band(const std::vector<std::vector<double>>& series) {
  Band band;
  band.mean = mean_curve(series);
  band.lower.resize(band.mean.size());
  band.upper.resize(band.mean.size());
  std::vector<double> column(series.size());
  for (std::size_t i = 0; i < band.mean.size(); ++i) {
    for (std::size_t s = 0; s < series.size(); ++s) column[s] = series[s][i];
    const double w = ci90_half_width(column);
    band.lower[i] = band.mean[i] - w;
    band.upper[i] = band.mean[i] + w;
  }
  return band;
}

std::map<int, double> normalize(const std::map<int, double>& raw) {
  std::map<int, double> out;
  if (raw.empty()) return out;
  double low = raw.begin()->second;
  for (const auto& [arch, v] : raw) low = std::min(low, v);
  const double shift = low < 0.0 ? -low : 0.0;
  double high = 0.0;
  for (const auto& [arch, v] : raw) high = std::max(high, v + shift);
  for (const auto& [arch, v] : raw) out[arch] = high > 0.0 ? (v + shift) / high : 1.0;
  return out;
}

TaskSummary summarize_task(const std::string& task,
                           const std::map<int, std::vector<std::vector<double>>>& series,
                           std::size_t window) {
  TaskSummary summary;
  summary.task = task;
  bool first = true;
  for (const auto& [arch, runs] : series) {
    for (const auto& r : runs) {
      if (first) {
        summary.episodes = r.size();
        first = false;
      } else if (r.size() != summary.episodes) {
        throw ConfigError("task " + task + ": runs differ in episode count (" +
                          std::to_string(r.size()) + " vs " + std::to_string(summary.episodes) + ")");
      }
    }
  }
  summary.window = std::min(window, summary.episodes);

  std::map<int, double> auc, final_raw;
  for (const auto& [arch, runs] : series) {
    ArchitectureSummary a;
    a.architecture = arch;
    a.seeds = runs.size();
    const Band band = confidence_band(runs);
    a.mean = band.mean;
    a.lower = band.lower;
    a.upper = band.upper;
    a.auc = trapezoid_auc(a.mean);
    std::vector<double> finals;
    for (const auto& r : runs) finals.push_back(final_mean(r, summary.window));
    a.final_raw_mean = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());
    a.final_ci90 = ci90_half_width(finals);
    auc[arch] = a.auc;
    final_raw[arch] = a.final_raw_mean;
    summary.architectures.push_back(std::move(a));
  }
  const auto auc_norm = normalize(auc);
  const auto final_norm = normalize(final_raw);
  for (auto& a : summary.architectures) {
    a.auc_norm = auc_norm.at(a.architecture);
    a.final_norm = final_norm.at(a.architecture);
  }
  return summary;
}

}  // namespace vdn::harness
