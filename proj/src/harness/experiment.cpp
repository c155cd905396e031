#include "vdn/harness/experiment.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <time.h>

#include "vdn/harness/csv.hpp"
#include "vdn/harness/metrics.hpp"
#include "vdn/harness/qtrace.hpp"

namespace vdn::harness {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::shared_ptr<const grid::GridMap> load_task_map(const ExperimentConfig& config, const std::string& task) {
  return std::make_shared<const grid::GridMap>(grid::load_map_file(config.map_path(task)));
}

// Identifies everything a run's output depends on.
std::string run_hash(const ExperimentConfig& config, int architecture, const grid::GridMap& map,
                     std::uint64_t seed) {
  const auto spec = agents::AgentSpec::preset(architecture);
  std::ostringstream key;
  key << run_fingerprint(config.train) << "spec=" << spec.hash() << "\nmap=" << grid::map_hash(map)
      << "\nseed=" << seed << "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key.str())));
  return buf;
}

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out.emplace(line.substr(0, eq), line.substr(eq + 3));
  }
  return out;
}

// CPU time of the calling thread; unaffected by other processes or workers.
double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string run_label(int architecture, const std::string& task, std::uint64_t seed) {
  return "run arch " + std::to_string(architecture) + " task " + task + " seed " + std::to_string(seed);
}

}  // namespace

std::filesystem::path run_directory(const std::filesystem::path& out, const std::string& task,
                                    int architecture, std::uint64_t seed) {
  return out / "runs" / task / ("arch" + std::to_string(architecture)) / ("seed" + std::to_string(seed));
}

RunRecord train_run(const ExperimentConfig& config, int architecture, const std::string& task,
                    std::uint64_t seed) {
  const auto map = load_task_map(config, task);
  const auto spec = agents::AgentSpec::preset(architecture);
  train::Trainer trainer(spec, map, config.train, seed);
  RunRecord r;
  r.architecture = architecture;
  r.task = task;
  r.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  const double cpu_start = thread_cpu_seconds();
  for (int e = 0; e < config.train.episodes; ++e) {
    r.rewards.push_back(trainer.run_training_episode());
    if (config.train.eval_period > 0 && (e + 1) % config.train.eval_period == 0) {
      r.eval_rewards.push_back(trainer.run_evaluation_episode());
    }
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.cpu_seconds = thread_cpu_seconds() - cpu_start;
  r.env_steps = trainer.env_steps();
  r.gradient_steps = trainer.gradient_steps();
  r.target_syncs = trainer.target_syncs();

  const auto dir = run_directory(config.out_dir, task, architecture, seed);
  write_series(dir / "rewards.csv", "reward", r.rewards);
  write_series(dir / "eval.csv", "reward", r.eval_rewards);
  save_network(dir / "checkpoint.vdnc", trainer.network());
  std::ostringstream meta;
  meta << "architecture = " << architecture << "\n"
       << "spec = " << spec.label() << "\n"
       << "spec_hash = " << spec.hash() << "\n"
       << "task = " << task << "\n"
       << "map = " << config.map_path(task).string() << "\n"
       << "map_hash = " << grid::map_hash(*map) << "\n"
       << "seed = " << seed << "\n"
       << "run_hash = " << run_hash(config, architecture, *map, seed) << "\n"
       << "version = " << VDN_VERSION << "\n"
       << "episodes_completed = " << r.rewards.size() << "\n"
       << "env_steps = " << r.env_steps << "\n"
       << "gradient_steps = " << r.gradient_steps << "\n"
       << "target_syncs = " << r.target_syncs << "\n"
       << "wall_seconds = " << format_number(r.wall_seconds) << "\n"
       << "cpu_seconds = " << format_number(r.cpu_seconds) << "\n"
       << "\n[trainer]\n"
       << run_fingerprint(config.train);
  write_file_atomic(dir / "metadata.txt", meta.str());
  return r;
}

bool load_run(const ExperimentConfig& config, int architecture, const std::string& task,
              std::uint64_t seed, RunRecord& record) {
  const auto dir = run_directory(config.out_dir, task, architecture, seed);
  if (!std::filesystem::exists(dir / "metadata.txt")) return false;
  const auto meta = read_metadata(dir / "metadata.txt");
  const auto map = load_task_map(config, task);
  const auto expected = run_hash(config, architecture, *map, seed);
  const auto found = meta.find("run_hash");
  if (found == meta.end() || found->second != expected) {
    throw ConfigError("resume hash mismatch in " + dir.string() + ": it was produced with different settings (stored " +
                      (found == meta.end() ? std::string("none") : found->second) + ", expected " + expected +
                      "); use a fresh output directory");
  }
  record = RunRecord{};
  record.architecture = architecture;
  record.task = task;
  record.seed = seed;
  record.rewards = read_series(dir / "rewards.csv");
  record.eval_rewards = read_series(dir / "eval.csv");
  auto number = [&](const char* key) {
    const auto it = meta.find(key);
    return it == meta.end() ? 0.0 : std::stod(it->second);
  };
  record.wall_seconds = number("wall_seconds");
  record.cpu_seconds = number("cpu_seconds");
  record.env_steps = static_cast<std::int64_t>(number("env_steps"));
  record.gradient_steps = static_cast<std::int64_t>(number("gradient_steps"));
  record.target_syncs = static_cast<std::int64_t>(number("target_syncs"));
  if (static_cast<int>(record.rewards.size()) != config.train.episodes) {
    throw ConfigError(dir.string() + ": rewards.csv holds " + std::to_string(record.rewards.size()) +
                      " episodes, expected " + std::to_string(config.train.episodes));
  }
  return true;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const std::function<void(const RunEvent&)>& progress) {
  config.validate();
  for (const auto& task : config.tasks) load_task_map(config, task);  // fail early on bad maps

  struct Job {
    int architecture;
    std::string task;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& task : config.tasks) {
    for (const int arch : config.architectures) {
      for (const auto seed : config.seeds) jobs.push_back({arch, task, seed});
    }
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  std::string failed_run;

  auto worker = [&] {
    for (;;) {
      {
        std::lock_guard lock(mutex);
        if (failure) return;
      }
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      const auto& job = jobs[i];
      try {
        RunRecord r;
        const bool resumed = load_run(config, job.architecture, job.task, job.seed, r);
        if (!resumed) {
          train_run(config, job.architecture, job.task, job.seed);
          // Aggregate from what is on disk so resumed and fresh runs agree.
          load_run(config, job.architecture, job.task, job.seed, r);
        }
        std::lock_guard lock(mutex);
        records[i] = std::move(r);
        if (progress) progress({job.architecture, job.task, job.seed, resumed, &records[i]});
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) {
          failure = std::current_exception();
          failed_run = run_label(job.architecture, job.task, job.seed);
        }
        return;
      }
    }
  };

  const int n = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < n; ++k) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const TrainingFault& e) {
      throw TrainingFault(failed_run + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(failed_run + ": " + e.what());
    } catch (const UsageError& e) {
      throw UsageError(failed_run + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(failed_run + ": " + e.what());
    }
  }
  write_outputs(config, records);
  return records;
}

void write_outputs(const ExperimentConfig& config, const std::vector<RunRecord>& records) {
  std::vector<TaskSummary> summaries;
  for (const auto& task : config.tasks) {
    std::vector<RunRecord> of_task;
    std::map<int, std::vector<std::vector<double>>> series;
    for (const auto& r : records) {
      if (r.task != task) continue;
      of_task.push_back(r);
      series[r.architecture].push_back(r.rewards);
    }
    if (of_task.empty()) continue;
    write_curves(config.out_dir / ("curves_" + task + ".csv"), of_task);
    summaries.push_back(summarize_task(task, series, static_cast<std::size_t>(config.final_window)));
    write_bands(config.out_dir / ("bands_" + task + ".csv"), summaries.back());
  }
  write_summary(config.out_dir / "summary.csv", summaries);

  std::ostringstream meta;
  meta << "version = " << VDN_VERSION << "\n";
  for (const auto& task : config.tasks) {
    meta << "map_hash." << task << " = " << grid::map_hash(*load_task_map(config, task)) << "\n";
  }
  meta << "\n" << format_config(config);
  write_file_atomic(config.out_dir / "metadata.txt", meta.str());
}

}  // namespace vdn::harness
