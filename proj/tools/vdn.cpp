// vdn: train, evaluate, trace and verify value-decomposition agents.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "vdn/harness/config.hpp"
#include "vdn/harness/csv.hpp"
#include "vdn/harness/experiment.hpp"
#include "vdn/harness/qtrace.hpp"
#include "vdn/harness/verify.hpp"

namespace {

using namespace vdn;
using namespace vdn::harness;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string arch, task, seeds, out, maps;
  int episodes = 0;
  int workers = 0;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (default $VDN_OUT_DIR, else runs)");
  cmd->add_option("--maps", o.maps, "Directory holding <task>.txt map files");
  cmd->add_option("--set", o.sets, "Override a configuration key, KEY=VALUE (repeatable)");
}

// Config file first, then $VDN_OUT_DIR, then flags.
ExperimentConfig build_config(const Options& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (const char* env = std::getenv("VDN_OUT_DIR"); env && *env) c.out_dir = env;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    set_value(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!o.arch.empty()) c.architectures = parse_architectures(o.arch);
  if (!o.task.empty()) c.tasks = parse_tasks(o.task);
  if (!o.seeds.empty()) c.seeds = parse_seeds(o.seeds);
  if (o.episodes > 0) c.train.episodes = o.episodes;
  if (o.workers > 0) c.workers = o.workers;
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.maps.empty()) c.maps_dir = o.maps;
  c.validate();
  return c;
}

std::shared_ptr<const grid::GridMap> task_map(const ExperimentConfig& c, const std::string& task) {
  if (!is_task_name(task)) {
    parse_tasks(task);  // throws with the list of valid names
  }
  return std::make_shared<const grid::GridMap>(grid::load_map_file(c.map_path(task)));
}

void write_command_metadata(const ExperimentConfig& c, const std::string& name, const std::string& extra) {
  std::ostringstream meta;
  meta << "command = " << name << "\n" << extra << "\n" << format_config(c);
  write_file_atomic(c.out_dir / (name + "_metadata.txt"), meta.str());
}

int cmd_train(const Options& o) {
  const auto c = build_config(o);
  std::size_t total = c.architectures.size() * c.tasks.size() * c.seeds.size();
  std::size_t done = 0;
  std::printf("scheduling %zu runs into %s\n", total, c.out_dir.string().c_str());
  std::fflush(stdout);
  run_experiment(c, [&](const RunEvent& e) {
    ++done;
    const auto& r = *e.record;
    double last = 0.0;
    const std::size_t tail = std::min<std::size_t>(100, r.rewards.size());
    for (std::size_t i = r.rewards.size() - tail; i < r.rewards.size(); ++i) last += r.rewards[i];
    std::printf("[%zu/%zu] arch %d task %s seed %llu %s: %zu episodes, last-%zu mean reward %.3f, %.1f s CPU\n", done,
                total, e.architecture, e.task.c_str(), static_cast<unsigned long long>(e.seed),
                e.resumed ? "resumed" : "trained", r.rewards.size(), tail, tail ? last / double(tail) : 0.0,
                r.cpu_seconds);
    std::fflush(stdout);
  });
  std::printf("wrote %s\n", (c.out_dir / "summary.csv").string().c_str());
  return kOk;
}

int cmd_eval(const Options& o, const std::string& checkpoint, int episodes) {
  auto c = build_config(o);
  const auto net = load_network(checkpoint);
  std::string rows = "task,seed,episode,reward\n";
  for (const auto& task : c.tasks) {
    const auto map = task_map(c, task);
    for (const auto seed : c.seeds) {
      for (int e = 0; e < episodes; ++e) {
        const std::uint64_t episode_seed = seed * 1000003ull + static_cast<std::uint64_t>(e);
        auto rollout = train::start_rollout(map, episode_seed, grid::Mode::Test, c.train.test_episode_limit, net);
        std::mt19937_64 rng(episode_seed);
        while (!rollout.env.done()) train::collect(rollout, net, 0.0, rng, c.train.segment_len);
        std::printf("%s seed %llu episode %d: reward %s\n", task.c_str(), static_cast<unsigned long long>(seed),
                    e + 1, format_number(rollout.episode_reward).c_str());
        rows += task + "," + std::to_string(seed) + "," + std::to_string(e + 1) + "," +
                format_number(rollout.episode_reward) + "\n";
      }
    }
  }
  write_file_atomic(c.out_dir / "eval.csv", rows);
  write_command_metadata(c, "eval", "checkpoint = " + checkpoint + "\nepisodes = " + std::to_string(episodes));
  std::printf("wrote %s\n", (c.out_dir / "eval.csv").string().c_str());
  return kOk;
}

int cmd_trace(const Options& o, const std::string& checkpoint, std::uint64_t seed) {
  auto c = build_config(o);
  const auto net = load_network(checkpoint);
  if (c.tasks.size() != 1) throw ConfigError("trace takes exactly one --task");
  const auto& task = c.tasks.front();
  c.seeds = {seed};
  const auto rows = q_trace(net, task_map(c, task), seed, c.train.test_episode_limit);
  const auto path = c.out_dir / ("trace_" + task + "_seed" + std::to_string(seed) + ".csv");
  write_trace(path, rows);
  write_command_metadata(c, "trace", "checkpoint = " + checkpoint + "\nfile = " + path.string());
  std::printf("wrote %zu rows to %s\n", rows.size(), path.string().c_str());
  return kOk;
}

int cmd_maps(const Options& o, std::vector<std::string> names) {
  ExperimentConfig c;
  if (!o.maps.empty()) c.maps_dir = o.maps;
  if (names.empty()) names = task_names();
  for (const auto& name : names) {
    const auto map = task_map(c, name);
    std::printf("%s (%s, %dx%d)\n%s", name.c_str(), std::string(grid::task_name(map->task)).c_str(), map->width,
                map->height, grid::format_map(*map).c_str());
    std::printf("legend: # wall  . floor  1 2 spawns  a b goals  P pickup  D drop-off  A apple  L lemon\n");
    std::printf("valid\n\n");
  }
  return kOk;
}

int cmd_verify(const Options& o, std::vector<std::string> suites, const std::string& fault) {
  VerifyOptions options;
  options.maps_dir = o.maps;
  if (!fault.empty() && fault != "gradient") throw ConfigError("--inject-fault supports only 'gradient'");
  options.inject_gradient_fault = fault == "gradient";
  if (suites.empty()) suites = suite_names();
  bool all = true;
  for (const auto& name : suites) {
    const auto r = run_suite(name, options);
    std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    all = all && r.passed;
  }
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Value-decomposition multi-agent Q-learning: training, evaluation and verification"};
  app.require_subcommand(1);
  Options o;
  std::string checkpoint, fault;
  int eval_episodes = 1;
  std::uint64_t trace_seed = 1;
  std::vector<std::string> names, suites;

  auto* train = app.add_subcommand("train", "Train (or resume) every selected run and write curves and summary");
  add_common(train, o);
  train->add_option("--arch", o.arch, "Architecture presets: 1..9, comma list or all");
  train->add_option("--task", o.task, "Tasks: comma list or all");
  train->add_option("--seeds", o.seeds, "N (seeds 1..N) or a comma list");
  train->add_option("--episodes", o.episodes, "Training episodes per run")->check(CLI::PositiveNumber);
  train->add_option("--workers", o.workers, "Parallel runs")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Greedy test episodes of a checkpoint");
  add_common(eval, o);
  eval->add_option("--checkpoint", checkpoint, "checkpoint.vdnc file")->required()->check(CLI::ExistingFile);
  eval->add_option("--task", o.task, "Tasks: comma list or all");
  eval->add_option("--seeds", o.seeds, "N (seeds 1..N) or a comma list");
  eval->add_option("--episodes", eval_episodes, "Episodes per task and seed")->check(CLI::PositiveNumber);

  auto* trace = app.add_subcommand("trace", "Per-step Q decomposition of one greedy test episode");
  add_common(trace, o);
  trace->add_option("--checkpoint", checkpoint, "checkpoint.vdnc file")->required()->check(CLI::ExistingFile);
  trace->add_option("--task", o.task, "Task")->required();
  trace->add_option("--seed", trace_seed, "Episode seed");

  auto* maps = app.add_subcommand("maps", "Print and validate task maps");
  maps->add_option("names", names, "Task names (default: all)");
  maps->add_option("--maps", o.maps, "Directory holding <task>.txt map files");

  auto* verify = app.add_subcommand("verify", "Run the built-in property suites");
  verify->add_option("--suite", suites, "gradient, argmax, invariance, lambda or env (repeatable)");
  verify->add_option("--maps", o.maps, "Directory holding <task>.txt map files");
  verify->add_option("--inject-fault", fault, "Corrupt one component on purpose (gradient)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o, checkpoint, eval_episodes);
    if (*trace) return cmd_trace(o, checkpoint, trace_seed);
    if (*maps) return cmd_maps(o, names);
    if (*verify) return cmd_verify(o, suites, fault);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
