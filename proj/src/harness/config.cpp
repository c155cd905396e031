#include "vdn/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "vdn/agents/spec.hpp"

namespace vdn::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  }
  return value;
}

template <typename T>
std::string number_text(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += items[i];
    } else {
      out += number_text(items[i]);
    }
  }
  return out;
}

struct Field {
  const char* section;
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field trainer_field(const char* name, T train::TrainConfig::*member) {
  return {"trainer", name,
          [name, member](ExperimentConfig& c, const std::string& v) {
            c.train.*member = parse_number<T>(v, name);
          },
          [member](const ExperimentConfig& c) { return number_text(c.train.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using TC = train::TrainConfig;
    std::vector<Field> f;
    f.push_back({"experiment", "architectures",
                 [](ExperimentConfig& c, const std::string& v) { c.architectures = parse_architectures(v); },
                 [](const ExperimentConfig& c) { return join(c.architectures); }});
    f.push_back({"experiment", "tasks",
                 [](ExperimentConfig& c, const std::string& v) { c.tasks = parse_tasks(v); },
                 [](const ExperimentConfig& c) { return join(c.tasks); }});
    f.push_back({"experiment", "seeds",
                 [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seeds(v); },
                 [](const ExperimentConfig& c) {
                   // A single seed N would read back as "seeds 1..N".
                   return c.seeds.size() == 1 ? join(c.seeds) + "," : join(c.seeds);
                 }});
    f.push_back({"experiment", "final_window",
                 [](ExperimentConfig& c, const std::string& v) { c.final_window = parse_number<int>(v, "final_window"); },
                 [](const ExperimentConfig& c) { return number_text(c.final_window); }});
    f.push_back({"experiment", "workers",
                 [](ExperimentConfig& c, const std::string& v) { c.workers = parse_number<int>(v, "workers"); },
                 [](const ExperimentConfig& c) { return number_text(c.workers); }});
    f.push_back({"experiment", "out",
                 [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const ExperimentConfig& c) { return c.out_dir.string(); }});
    f.push_back({"experiment", "maps",
                 [](ExperimentConfig& c, const std::string& v) { c.maps_dir = v; },
                 [](const ExperimentConfig& c) { return c.maps_dir.string(); }});
    f.push_back(trainer_field("episodes", &TC::episodes));
    f.push_back(trainer_field("gamma", &TC::gamma));
    f.push_back(trainer_field("lambda", &TC::lambda));
    f.push_back(trainer_field("segment_len", &TC::segment_len));
    f.push_back(trainer_field("lr", &TC::lr));
    f.push_back(trainer_field("epsilon_start", &TC::epsilon_start));
    f.push_back(trainer_field("epsilon_end", &TC::epsilon_end));
    f.push_back(trainer_field("epsilon_decay_steps", &TC::epsilon_decay_steps));
    f.push_back(trainer_field("epsilon_decay_fraction", &TC::epsilon_decay_fraction));
    f.push_back(trainer_field("buffer_capacity", &TC::buffer_capacity));
    f.push_back(trainer_field("batch_size", &TC::batch_size));
    f.push_back(trainer_field("target_sync_steps", &TC::target_sync_steps));
    f.push_back(trainer_field("warmup_segments", &TC::warmup_segments));
    f.push_back(trainer_field("train_every", &TC::train_every));
    f.push_back(trainer_field("eval_period", &TC::eval_period));
    f.push_back(trainer_field("train_episode_limit", &TC::train_episode_limit));
    f.push_back(trainer_field("test_episode_limit", &TC::test_episode_limit));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& name) {
  for (const auto& f : fields()) {
    if (f.name == name && (section.empty() || f.section == section)) return &f;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"fetch_open",       "fetch_1corridor",
                                              "fetch_2corridor",  "switch_open",
                                              "switch_1corridor", "switch_2corridor",
                                              "checkers"};
  return names;
}

bool is_task_name(const std::string& name) {
  const auto& names = task_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

void ExperimentConfig::validate() const {
  if (architectures.empty()) throw ConfigError("no architectures selected");
  if (tasks.empty()) throw ConfigError("no tasks selected");
  if (seeds.empty()) throw ConfigError("no seeds selected");
  for (const int a : architectures) agents::AgentSpec::preset(a);
  for (const auto& t : tasks) {
    if (!is_task_name(t)) throw ConfigError("unknown task '" + t + "'");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (std::set<int>(architectures.begin(), architectures.end()).size() != architectures.size()) {
    throw ConfigError("architectures must be distinct");
  }
  if (final_window < 1) throw ConfigError("final_window must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  train.validate();
}

std::filesystem::path ExperimentConfig::map_path(const std::string& task) const {
  const std::filesystem::path dir = maps_dir.empty() ? std::filesystem::path(VDN_DEFAULT_MAPS_DIR) : maps_dir;
  return dir / (task + ".txt");
}

std::vector<int> parse_architectures(const std::string& text) {
  if (trim(text) == "all") {
    std::vector<int> all;
    for (int n = 1; n <= agents::kNumPresets; ++n) all.push_back(n);
    return all;
  }
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const int n = parse_number<int>(item, "architectures");
    agents::AgentSpec::preset(n);
    out.push_back(n);
  }
  if (out.empty()) throw ConfigError("no architectures given");
  return out;
}

std::vector<std::string> parse_tasks(const std::string& text) {
  if (trim(text) == "all") return task_names();
  std::vector<std::string> out;
  for (const auto& item : split(text, ',')) {
    if (!is_task_name(item)) {
      std::string valid;
      for (const auto& n : task_names()) valid += " " + n;
      throw ConfigError("unknown task '" + item + "'; valid tasks:" + valid);
    }
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("no tasks given");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  if (text.find(',') == std::string::npos) {
    const auto n = parse_number<std::uint64_t>(trim(text), "seeds");
    if (n == 0) throw ConfigError("seeds count must be >= 1");
    for (std::uint64_t s = 1; s <= n; ++s) out.push_back(s);
    return out;
  }
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;  // a trailing comma marks a one-seed list
    out.push_back(parse_number<std::uint64_t>(item, "seeds"));
  }
  if (out.empty()) throw ConfigError("no seeds given");
  return out;
}

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  std::string section, name = key;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    section = key.substr(0, dot);
    name = key.substr(dot + 1);
  }
  const Field* f = find_field(section, name);
  if (!f) throw ConfigError("unknown config key '" + key + "'");
  f->set(config, trim(value));
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto where = [&](std::size_t col) {
      return source + ":" + std::to_string(line_no) + ":" + std::to_string(col + 1) + ": ";
    };
    const auto hash = line.find('#');
    const std::string body = hash == std::string::npos ? line : line.substr(0, hash);
    const auto first = body.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (body[first] == '[') {
      const auto close = body.find(']', first);
      if (close == std::string::npos || !trim(body.substr(close + 1)).empty()) {
        throw ConfigError(where(first) + "malformed section header");
      }
      section = trim(body.substr(first + 1, close - first - 1));
      if (section != "experiment" && section != "trainer") {
        throw ConfigError(where(first + 1) + "unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where(first) + "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where(first) + "missing key");
    const Field* f = find_field(section, key);
    if (!f) {
      throw ConfigError(where(first) + "unknown key '" + key + "'" +
                        (section.empty() ? "" : " in section [" + section + "]"));
    }
    const auto value_col = body.find_first_not_of(" \t", eq + 1);
    try {
      f->set(config, trim(body.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where(value_col == std::string::npos ? eq + 1 : value_col) + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      section = f.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(f.name) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string run_fingerprint(const train::TrainConfig& config) {
  ExperimentConfig c;
  c.train = config;
  std::string out;
  for (const auto& f : fields()) {
    if (std::string(f.section) == "trainer") out += std::string(f.name) + " = " + f.get(c) + "\n";
  }
  return out;
}

}  // namespace vdn::harness
