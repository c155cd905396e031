#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vdn/agents/policy.hpp"
#include "vdn/harness/config.hpp"
#include "vdn/harness/csv.hpp"
#include "vdn/harness/experiment.hpp"
#include "vdn/harness/metrics.hpp"
#include "vdn/harness/qtrace.hpp"
#include "vdn/harness/verify.hpp"

namespace vdn::harness {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vdn_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// --- metrics ---

TEST(Metrics, SawtoothAucMatchesClosedForm) {
  // Period 0,1,2,3 repeated k times, closed by a final 0. Each period adds
  // 0.5 + 1.5 + 2.5 + 1.5 = 6.
  const int k = 1000;
  std::vector<double> curve;
  for (int i = 0; i < 4 * k + 1; ++i) curve.push_back(i % 4);
  EXPECT_NEAR(trapezoid_auc(curve), 6.0 * k, 1e-9);
}

TEST(Metrics, SingleArchitectureConstantCurveNormalizesToOne) {
  const auto s = summarize_task("switch_open", {{3, {std::vector<double>(50, 1.0)}}}, 10);
  ASSERT_EQ(s.architectures.size(), 1u);
  EXPECT_DOUBLE_EQ(s.architectures[0].auc_norm, 1.0);
  EXPECT_DOUBLE_EQ(s.architectures[0].auc, 49.0);
  EXPECT_DOUBLE_EQ(s.architectures[0].final_raw_mean, 1.0);
}

TEST(Metrics, CurvesTwiceApartNormalizeToOneAndHalf) {
  std::vector<double> base(40);
  std::iota(base.begin(), base.end(), 1.0);
  std::vector<double> twice = base;
  for (auto& v : twice) v *= 2.0;
  const auto s = summarize_task("fetch_open", {{1, {base}}, {3, {twice}}}, 10);
  EXPECT_DOUBLE_EQ(s.architectures[0].auc_norm, 0.5);
  EXPECT_DOUBLE_EQ(s.architectures[1].auc_norm, 1.0);
  EXPECT_DOUBLE_EQ(s.architectures[0].final_norm, 0.5);
}

TEST(Metrics, NegativeScoresAreShiftedIntoUnitRange) {
  const auto n = normalize({{1, -5.0}, {2, 5.0}, {3, 0.0}});
  EXPECT_DOUBLE_EQ(n.at(1), 0.0);
  EXPECT_DOUBLE_EQ(n.at(2), 1.0);
  EXPECT_DOUBLE_EQ(n.at(3), 0.5);
  const auto zeros = normalize({{1, 0.0}, {2, 0.0}});
  EXPECT_DOUBLE_EQ(zeros.at(1), 1.0);
  EXPECT_DOUBLE_EQ(zeros.at(2), 1.0);
}

TEST(Metrics, BestArchitectureAttainsOneAndDominanceIsMonotone) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<int, std::vector<std::vector<double>>> series;
    std::vector<double> a(30);
    for (auto& v : a) v = g(rng);
    std::vector<double> b = a;
    for (auto& v : b) v += u(rng);  // b dominates a pointwise
    std::vector<double> c(30);
    for (auto& v : c) v = g(rng);
    series[1] = {a};
    series[2] = {b};
    series[3] = {c};
    const auto s = summarize_task("checkers", series, 5);
    int at_one = 0;
    for (const auto& arch : s.architectures) {
      EXPECT_GE(arch.auc_norm, 0.0);
      EXPECT_LE(arch.auc_norm, 1.0 + 1e-12);
      if (arch.auc_norm == 1.0) ++at_one;
    }
    EXPECT_GE(at_one, 1);
    EXPECT_LE(s.architectures[0].auc_norm, s.architectures[1].auc_norm);
  }
}

TEST(Metrics, FinalWindowFormulas) {
  EXPECT_DOUBLE_EQ(final_mean(std::vector<double>(100, 4.5), 10), 4.5);
  std::vector<double> linear(1001);
  std::iota(linear.begin(), linear.end(), 0.0);  // 0..N with N = 1000
  EXPECT_DOUBLE_EQ(final_mean(linear, 1001), 500.0);
  const double n = 1000.0, w = 50.0;
  EXPECT_NEAR(final_mean(linear, 50), n - (w - 1.0) / 2.0, 1e-12);
  EXPECT_THROW(final_mean(linear, 1002), ConfigError);
  EXPECT_THROW(final_mean(linear, 0), ConfigError);
}

TEST(Metrics, Ci90UsesStudentT) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const double sd = std::sqrt(82.5 / 9.0);
  const double t9 = 1.8331129326536335;  // 0.95 quantile, 9 degrees of freedom
  EXPECT_NEAR(ci90_half_width(x), t9 * sd / std::sqrt(10.0), 1e-9);
  EXPECT_EQ(ci90_half_width(std::vector<double>{2.0}), 0.0);

  const auto band = confidence_band({{0, 1, 2}, {2, 3, 4}, {1, 5, 0}});
  for (std::size_t i = 0; i < band.mean.size(); ++i) {
    EXPECT_LE(band.lower[i], band.mean[i]);
    EXPECT_GE(band.upper[i], band.mean[i]);
  }
}

TEST(Metrics, MismatchedLengthsAreRejected) {
  EXPECT_THROW(summarize_task("fetch_open", {{1, {{1, 2, 3}}}, {3, {{1, 2}}}}, 2), ConfigError);
}

// --- files ---

TEST(Csv, NumbersUseNineSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(5.0), "5");
  EXPECT_EQ(format_number(-123456789.0), "-123456789");
}

TEST(Csv, EmptyRecordSetGivesHeaderOnlyFile) {
  const auto dir = scratch("empty");
  write_curves(dir / "c.csv", {});
  EXPECT_EQ(read_file(dir / "c.csv"), "task,architecture,seed,episode,reward\n");
  EXPECT_TRUE(read_curves(dir / "c.csv").empty());
  write_summary(dir / "s.csv", {});
  EXPECT_TRUE(read_summary(dir / "s.csv").empty());
}

TEST(Csv, CurvesRoundTrip) {
  const auto dir = scratch("curves");
  std::vector<RunRecord> records(3);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> events(0, 40);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].task = "fetch_open";
    records[i].architecture = static_cast<int>(i) + 1;
    records[i].seed = 10 + i;
    for (int e = 0; e < 25; ++e) records[i].rewards.push_back(3.0 * events(rng) + 5.0 * events(rng));
  }
  write_curves(dir / "c.csv", records);
  const auto back = read_curves(dir / "c.csv");
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].task, records[i].task);
    EXPECT_EQ(back[i].architecture, records[i].architecture);
    EXPECT_EQ(back[i].seed, records[i].seed);
    EXPECT_EQ(back[i].rewards, records[i].rewards);
  }
  const auto text = read_file(dir / "c.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 3 * 25);
}

TEST(Csv, SummaryRoundTrip) {
  const auto dir = scratch("summary");
  std::map<int, std::vector<std::vector<double>>> series{{1, {{1, 2, 3}, {2, 2, 2}}}, {3, {{4, 5, 6}, {4, 4, 4}}}};
  const auto t = summarize_task("switch_open", series, 2);
  write_summary(dir / "s.csv", {t});
  const auto rows = read_summary(dir / "s.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].architecture, 3);
  EXPECT_DOUBLE_EQ(rows[1].auc_norm, 1.0);
  EXPECT_EQ(format_number(rows[0].auc_norm), format_number(t.architectures[0].auc_norm));
  EXPECT_EQ(format_number(rows[0].final_ci90), format_number(t.architectures[0].final_ci90));
}

TEST(Csv, ErrorsCarryThePath) {
  try {
    read_file("/nonexistent/vdn/file.csv");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/vdn/file.csv"), std::string::npos);
  }
}

// --- config ---

TEST(Config, FormatParseRoundTrip) {
  ExperimentConfig c;
  c.architectures = {1, 3, 9};
  c.tasks = {"fetch_open", "checkers"};
  c.seeds = {7};
  c.train.lr = 3.5e-4;
  c.train.episodes = 123;
  c.final_window = 1000;
  c.workers = 3;
  const auto back = parse_config(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
  EXPECT_EQ(back.seeds, std::vector<std::uint64_t>{7});
  EXPECT_EQ(back.train.lr, 3.5e-4);
  EXPECT_EQ(back.architectures, (std::vector<int>{1, 3, 9}));
}

TEST(Config, ErrorsReportLineAndColumn) {
  try {
    parse_config("[trainer]\n# comment\nlr = abc\n", "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg:3:6: ", 0), 0u) << e.what();
  }
  try {
    parse_config("[experiment]\n  bogus = 1\n", "cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg:2:3: unknown key 'bogus'", 0), 0u) << e.what();
  }
  EXPECT_THROW(parse_config("[nope]\n"), ConfigError);
  EXPECT_THROW(parse_config("[trainer]\nepisodes\n"), ConfigError);
}

TEST(Config, SelectionSyntax) {
  EXPECT_EQ(parse_seeds("3"), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(parse_seeds("1,7,9"), (std::vector<std::uint64_t>{1, 7, 9}));
  EXPECT_EQ(parse_seeds("7,"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(parse_architectures("all").size(), 9u);
  EXPECT_EQ(parse_tasks("all").size(), 7u);
  EXPECT_THROW(parse_architectures("10"), ConfigError);
  EXPECT_THROW(parse_tasks("fetch_closed"), ConfigError);
  // Full grid: 9 architectures x 7 tasks x 10 seeds.
  EXPECT_EQ(parse_architectures("all").size() * parse_tasks("all").size() * parse_seeds("10").size(), 630u);
}

TEST(Config, SetValueAndValidate) {
  ExperimentConfig c;
  set_value(c, "lr", "0.001");
  set_value(c, "trainer.episodes", "9");
  set_value(c, "experiment.workers", "2");
  EXPECT_EQ(c.train.lr, 0.001);
  EXPECT_EQ(c.train.episodes, 9);
  EXPECT_EQ(c.workers, 2);
  EXPECT_THROW(set_value(c, "nonsense", "1"), ConfigError);
  c.seeds = {1, 1};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, MissingMapIsNamed) {
  ExperimentConfig c;
  c.maps_dir = "/nonexistent/maps";
  c.train.episodes = 1;
  c.out_dir = scratch("missing_map");
  try {
    run_experiment(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/maps/switch_open.txt"), std::string::npos) << e.what();
  }
}

// --- experiment ---

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.architectures = {3};
  c.tasks = {"fetch_open"};
  c.seeds = {1, 2};
  c.out_dir = out;
  c.final_window = 2;
  c.train.episodes = 4;
  c.train.train_episode_limit = 40;
  c.train.test_episode_limit = 30;
  c.train.buffer_capacity = 32;
  c.train.batch_size = 2;
  c.train.warmup_segments = 4;
  c.train.target_sync_steps = 50;
  c.train.eval_period = 2;
  return c;
}

std::vector<std::string> output_files(const fs::path& out) {
  return {read_file(out / "curves_fetch_open.csv"), read_file(out / "bands_fetch_open.csv"),
          read_file(out / "summary.csv")};
}

TEST(Experiment, WritesOneRecordPerRun) {
  const auto out = scratch("records");
  const auto records = run_experiment(tiny_config(out));
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.rewards.size(), 4u);
    EXPECT_EQ(r.eval_rewards.size(), 2u);
    EXPECT_EQ(r.env_steps, 4 * 40);
    const auto dir = run_directory(out, "fetch_open", 3, r.seed);
    EXPECT_TRUE(fs::exists(dir / "checkpoint.vdnc"));
    EXPECT_TRUE(fs::exists(dir / "metadata.txt"));
  }
  EXPECT_NE(read_file(run_directory(out, "fetch_open", 3, 1) / "checkpoint.vdnc"),
            read_file(run_directory(out, "fetch_open", 3, 2) / "checkpoint.vdnc"));
  EXPECT_EQ(read_summary(out / "summary.csv").size(), 1u);
  const auto meta = read_file(out / "metadata.txt");
  EXPECT_NE(meta.find("map_hash.fetch_open"), std::string::npos);
  EXPECT_NE(meta.find("episodes = 4"), std::string::npos);
}

TEST(Experiment, RerunIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(tiny_config(a));
  run_experiment(tiny_config(b));
  EXPECT_EQ(output_files(a), output_files(b));
  EXPECT_EQ(read_file(run_directory(a, "fetch_open", 3, 2) / "checkpoint.vdnc"),
            read_file(run_directory(b, "fetch_open", 3, 2) / "checkpoint.vdnc"));
}

TEST(Experiment, ResumeAfterInterruptionIsByteIdentical) {
  const auto full = scratch("resume_full"), part = scratch("resume_part");
  run_experiment(tiny_config(full));

  auto first = tiny_config(part);
  first.seeds = {1};
  run_experiment(first);  // stopped after one of two runs
  int resumed = 0, trained = 0;
  run_experiment(tiny_config(part), [&](const RunEvent& e) { (e.resumed ? resumed : trained)++; });
  EXPECT_EQ(resumed, 1);
  EXPECT_EQ(trained, 1);
  EXPECT_EQ(output_files(full), output_files(part));

  // A run without its completion marker is trained again.
  fs::remove(run_directory(part, "fetch_open", 3, 2) / "metadata.txt");
  run_experiment(tiny_config(part));
  EXPECT_EQ(output_files(full), output_files(part));
}

TEST(Experiment, ResumeWithDifferentSettingsIsRejected) {
  const auto out = scratch("mismatch");
  run_experiment(tiny_config(out));
  auto changed = tiny_config(out);
  changed.train.lr = 2e-4;
  try {
    run_experiment(changed);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hash mismatch"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("seed 1"), std::string::npos) << e.what();
  }
  // Worker count and output aggregation settings do not affect runs.
  auto wider = tiny_config(out);
  wider.workers = 2;
  wider.final_window = 3;
  EXPECT_NO_THROW(run_experiment(wider));
}

TEST(Experiment, ParallelWorkersMatchSerial) {
  const auto serial = scratch("serial"), parallel = scratch("parallel");
  run_experiment(tiny_config(serial));
  auto c = tiny_config(parallel);
  c.workers = 2;
  run_experiment(c);
  EXPECT_EQ(output_files(serial), output_files(parallel));
}

// --- q-trace ---

std::shared_ptr<const grid::GridMap> fetch_map() {
  ExperimentConfig c;
  return std::make_shared<const grid::GridMap>(grid::load_map_file(c.map_path("fetch_open")));
}

TEST(QTrace, ZeroWeightNetworkTracesZerosAndEnvEvents) {
  agents::PolicyNetwork<float> net(agents::AgentSpec::preset(3), 1);
  net.zero_parameters();
  const auto map = fetch_map();
  const auto rows = q_trace(net, map, 11, 300);

  // Zero Q everywhere: greedy picks action 0 for both agents.
  auto env = grid::reset(map, 11, grid::Mode::Test, 300).state;
  std::vector<TraceRow> expected;
  while (!env.done()) {
    const int step = env.step;
    const std::vector<grid::Action> actions(2, static_cast<grid::Action>(0));
    const auto r = grid::step(env, actions);
    if (r.events.empty()) {
      expected.push_back({step, 0, 0, 0, 0.0, 0, ""});
    } else {
      for (const auto& e : r.events) {
        expected.push_back({step, 0, 0, 0, e.amount, e.agent + 1, std::string(grid::event_kind_name(e.kind))});
      }
    }
  }
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, expected[i].step);
    EXPECT_EQ(rows[i].q1, 0.0f);
    EXPECT_EQ(rows[i].q2, 0.0f);
    EXPECT_EQ(rows[i].q_total, 0.0f);
    EXPECT_EQ(rows[i].reward, expected[i].reward);
    EXPECT_EQ(rows[i].event_agent, expected[i].event_agent);
    EXPECT_EQ(rows[i].event_kind, expected[i].event_kind);
  }
}

TEST(QTrace, TotalIsTheFloatSumOfComponents) {
  for (const int preset : {2, 3, 5, 7, 8}) {
    const agents::PolicyNetwork<float> net(agents::AgentSpec::preset(preset), 40 + static_cast<std::uint64_t>(preset));
    const auto rows = q_trace(net, fetch_map(), 3, 200);
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows) EXPECT_EQ(r.q_total, r.q1 + r.q2) << "preset " << preset << " step " << r.step;
    EXPECT_EQ(rows.back().step, 199);
  }
}

TEST(QTrace, RejectsArchitecturesWithoutComponents) {
  for (const int preset : {1, 9}) {
    const agents::PolicyNetwork<float> net(agents::AgentSpec::preset(preset), 1);
    EXPECT_THROW(q_trace(net, fetch_map(), 1, 10), UsageError);
  }
}

TEST(QTrace, CsvLayout) {
  std::vector<TraceRow> rows{{0, 0.5f, 0.25f, 0.75f, 0.0, 0, ""}, {1, 1.0f, 2.0f, 3.0f, 5.0, 2, "dropoff"}};
  EXPECT_EQ(format_trace(rows),
            "step,q1,q2,q_total,reward,event_agent,event_kind\n0,0.5,0.25,0.75,0,,\n1,1,2,3,5,2,dropoff\n");
}

TEST(Checkpoint, SaveLoadRoundTrip) {
  const auto dir = scratch("ckpt");
  for (const int preset : {3, 9}) {
    const agents::PolicyNetwork<float> net(agents::AgentSpec::preset(preset), 77);
    save_network(dir / "n.vdnc", net);
    const auto back = load_network(dir / "n.vdnc");
    EXPECT_EQ(back.spec().label(), net.spec().label());
    std::vector<std::vector<float>> obs(2, std::vector<float>(agents::kObsInput, 0.25f));
    auto h1 = net.initial_hidden(), h2 = back.initial_hidden();
    EXPECT_EQ(net.forward(obs, h1).heads, back.forward(obs, h2).heads);
  }
  write_file_atomic(dir / "bad.vdnc", "not a checkpoint");
  EXPECT_THROW(load_network(dir / "bad.vdnc"), ConfigError);
}

// --- verify ---

TEST(Verify, FastSuitesPass) {
  for (const auto* name : {"argmax", "invariance", "lambda", "env"}) {
    const auto r = run_suite(name, {});
    EXPECT_TRUE(r.passed) << name << ": " << r.detail;
  }
  EXPECT_THROW(run_suite("nope", {}), ConfigError);
}

}  // namespace
}  // namespace vdn::harness
