#include "vdn/harness/csv.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "vdn/nn/errors.hpp"

namespace vdn::harness {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& text, const std::filesystem::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(path.string() + ":" + std::to_string(line) + ": bad number '" + text + "'");
}

// Lines of a CSV file after checking its header.
std::vector<std::string> data_lines(const std::filesystem::path& path, const std::string& header) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw ConfigError(path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw ConfigError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_curves(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::string out = "task,architecture,seed,episode,reward\n";
  for (const auto& r : records) {
    const std::string prefix = r.task + "," + std::to_string(r.architecture) + "," + std::to_string(r.seed) + ",";
    for (std::size_t e = 0; e < r.rewards.size(); ++e) {
      out += prefix + std::to_string(e + 1) + "," + format_number(r.rewards[e]) + "\n";
    }
  }
  write_file_atomic(path, out);
}

std::vector<RunRecord> read_curves(const std::filesystem::path& path) {
  std::vector<RunRecord> out;
  int line_no = 1;
  for (const auto& line : data_lines(path, "task,architecture,seed,episode,reward")) {
    ++line_no;
    const auto f = split_row(line);
    if (f.size() != 5) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    const int arch = static_cast<int>(to_double(f[1], path, line_no));
    const auto seed = static_cast<std::uint64_t>(std::stoull(f[2]));
    const auto episode = static_cast<std::size_t>(to_double(f[3], path, line_no));
    if (out.empty() || out.back().task != f[0] || out.back().architecture != arch || out.back().seed != seed) {
      RunRecord r;
      r.task = f[0];
      r.architecture = arch;
      r.seed = seed;
      out.push_back(std::move(r));
    }
    auto& r = out.back();
    if (episode != r.rewards.size() + 1) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": episodes out of order");
    }
    r.rewards.push_back(to_double(f[4], path, line_no));
  }
  return out;
}

void write_bands(const std::filesystem::path& path, const TaskSummary& summary) {
  std::string out = "task,architecture,episode,mean,lower,upper\n";
  for (const auto& a : summary.architectures) {
    const std::string prefix = summary.task + "," + std::to_string(a.architecture) + ",";
    for (std::size_t e = 0; e < a.mean.size(); ++e) {
      out += prefix + std::to_string(e + 1) + "," + format_number(a.mean[e]) + "," +
             format_number(a.lower[e]) + "," + format_number(a.upper[e]) + "\n";
    }
  }
  write_file_atomic(path, out);
}

void write_summary(const std::filesystem::path& path, const std::vector<TaskSummary>& tasks) {
  std::string out = "task,architecture,auc_norm,final_norm,final_raw_mean,final_ci90\n";
  for (const auto& t : tasks) {
    for (const auto& a : t.architectures) {
      out += t.task + "," + std::to_string(a.architecture) + "," + format_number(a.auc_norm) + "," +
             format_number(a.final_norm) + "," + format_number(a.final_raw_mean) + "," +
             format_number(a.final_ci90) + "\n";
    }
  }
  write_file_atomic(path, out);
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
  std::vector<SummaryRow> out;
  int line_no = 1;
  for (const auto& line : data_lines(path, "task,architecture,auc_norm,final_norm,final_raw_mean,final_ci90")) {
    ++line_no;
    const auto f = split_row(line);
    if (f.size() != 6) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    SummaryRow row;
    row.task = f[0];
    row.architecture = static_cast<int>(to_double(f[1], path, line_no));
    row.auc_norm = to_double(f[2], path, line_no);
    row.final_norm = to_double(f[3], path, line_no);
    row.final_raw_mean = to_double(f[4], path, line_no);
    row.final_ci90 = to_double(f[5], path, line_no);
    out.push_back(row);
  }
  return out;
}

void write_series(const std::filesystem::path& path, const std::string& header,
                  const std::vector<double>& values) {
  std::string out = header + "\n";
  for (const double v : values) out += format_number(v) + "\n";
  write_file_atomic(path, out);
}

std::vector<double> read_series(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) out.push_back(to_double(line, path, line_no));
  }
  return out;
}

}  // namespace vdn::harness
