#include "doctest.h"

#include "marl/csv.hpp"
#include "marl/experiment.hpp"
#include "marl/memory.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace marl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("exp_test_" + name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ExperimentConfig tiny_cfg() {
  ExperimentConfig cfg;  // the one-shot matrix game by default
  cfg.trainer.agent_hidden = 4;
  cfg.trainer.mix_embed = 2;
  cfg.trainer.critic_hidden = 4;
  cfg.trainer.batch_size = 2;
  cfg.trainer.buffer_capacity = 16;
  cfg.trainer.eval_episodes = 1;
  cfg.trainer.total_steps = 40;
  cfg.trainer.eval_interval = 20;
  cfg.trainer.epsilon = {1.0, 0.1, 30};
  cfg.seeds = {1, 2, 3};
  return cfg;
}

}  // namespace

TEST_CASE("format_double is the shortest exact round trip") {
  for (double v : {0.1, 1.0 / 3.0, 11.0, -30.0, 1e-6, 0.925, 5e-4, 0.0}) {
    CAPTURE(v);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(11.0) == "11");
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(format_double(std::nan("")), NumericsError);
}

TEST_CASE("percentile interpolates between order statistics") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(percentile({30, 0, 20, 10}, 0.25) == 7.5);  // sorting is internal
  CHECK(percentile({30, 0, 20, 10}, 0.0) == 0.0);
  CHECK(percentile({30, 0, 20, 10}, 1.0) == 30.0);
  CHECK(percentile({5}, 0.75) == 5.0);
  CHECK_THROWS_AS(percentile({}, 0.5), ConfigError);
  CHECK_THROWS_AS(percentile({1.0}, 1.5), ConfigError);
}

TEST_CASE("csv files round-trip rows and complain about misuse") {
  TempDir tmp("csv");
  fs::create_directories(tmp.path);
  const std::string path = tmp.path + "/t.csv";
  const std::vector<std::string> header = {"a", "b"};
  const std::vector<std::vector<double>> rows = {{1.0, 0.1}, {-3.0, 2e-3}};
  write_csv(path, header, rows);

  const CsvTable t = read_csv(path);
  CHECK(t.header == header);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == rows[0]);
  CHECK(t.rows[1] == rows[1]);
  CHECK(t.col("b") == std::vector<double>{0.1, 2e-3});
  CHECK(t.column("missing") == -1);
  CHECK_THROWS_AS(t.col("missing"), IoError);
  CHECK_THROWS_AS(read_csv(tmp.path + "/absent.csv"), IoError);
  CHECK_THROWS_AS(write_csv(path, header, {{1.0}}), IoError);  // ragged
}

TEST_CASE("metrics files follow the pinned schema") {
  TempDir tmp("metrics");
  fs::create_directories(tmp.path);
  MetricsRecord r1;
  r1.step = 10;
  r1.episode = 4;
  r1.loss = 0.5;
  r1.mean_y = 1.25;
  r1.mean_E_s = 1.5;
  r1.mean_E_su = -0.25;
  r1.eval_return_mean = 7.0;
  r1.eval_success_rate = 0.75;
  r1.table_size = 42;
  r1.table_hits = 9;
  r1.table_misses = 3;
  r1.wall_ms = 5.5;
  MetricsRecord r2 = r1;
  r2.step = 20;
  r2.wall_ms = 2.25;

  const std::string plain = tmp.path + "/plain.csv";
  write_metrics_csv(plain, {r1, r2}, false);
  const CsvTable t = read_csv(plain);
  const std::vector<std::string> want = {
      "step", "episode", "loss", "mean_y", "mean_E_s", "mean_E_su",
      "eval_return_mean", "eval_success_rate", "table_size", "table_hits",
      "table_misses", "wall_ms"};
  CHECK(t.header == want);
  CHECK(read_file(plain).rfind(kMetricsHeader, 0) == 0);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.col("step") == std::vector<double>{10, 20});
  CHECK(t.col("loss") == std::vector<double>{0.5, 0.5});
  CHECK(t.col("mean_E_su") == std::vector<double>{-0.25, -0.25});
  CHECK(t.col("eval_success_rate") == std::vector<double>{0.75, 0.75});
  CHECK(t.col("table_hits") == std::vector<double>{9, 9});
  // wall clock is the lone nondeterministic column: zeroed by default
  CHECK(t.col("wall_ms") == std::vector<double>{0.0, 0.0});

  const std::string timed = tmp.path + "/timed.csv";
  write_metrics_csv(timed, {r1, r2}, true);
  CHECK(read_csv(timed).col("wall_ms") == std::vector<double>{5.5, 2.25});
}

TEST_CASE("run_experiment writes one csv per seed plus summary and plot") {
  TempDir tmp("run");
  const ExperimentConfig cfg = tiny_cfg();
  const RunArtifact art = run_experiment(cfg, tmp.path);

  REQUIRE(art.seed_csvs.size() == 3);
  CHECK(art.seed_csvs[0] == tmp.path + "/seed_1.csv");
  for (const auto& p : art.seed_csvs) CHECK(fs::exists(p));
  CHECK(fs::exists(art.summary_csv));
  CHECK(fs::exists(art.plot_svg));
  CHECK(fs::exists(art.resolved_config));
  CHECK(read_file(art.plot_svg).find("<svg") != std::string::npos);

  // the resolved snapshot parses back to a fixed point
  const ExperimentConfig replay = parse_config(art.resolved_config);
  std::ostringstream os;
  write_resolved_config(os, replay);
  CHECK(os.str() == read_file(art.resolved_config));

  // summary rows are cross-seed percentiles at each record index
  const CsvTable summary = read_csv(art.summary_csv);
  CHECK(summary.header ==
        std::vector<std::string>{"record", "step_median", "eval_return_median",
                                 "eval_return_p25", "eval_return_p75"});
  std::vector<CsvTable> seeds;
  for (const auto& p : art.seed_csvs) seeds.push_back(read_csv(p));
  REQUIRE(summary.rows.size() == seeds[0].rows.size());
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    CAPTURE(i);
    std::vector<double> steps, returns;
    for (const auto& s : seeds) {
      steps.push_back(s.col("step")[i]);
      returns.push_back(s.col("eval_return_mean")[i]);
    }
    CHECK(summary.rows[i][0] == static_cast<double>(i));
    CHECK(summary.rows[i][1] == percentile(steps, 0.5));
    CHECK(summary.rows[i][2] == percentile(returns, 0.5));
    CHECK(summary.rows[i][3] == percentile(returns, 0.25));
    CHECK(summary.rows[i][4] == percentile(returns, 0.75));
  }
}

TEST_CASE("experiments rerun byte-for-byte") {
  TempDir a("rerun_a");
  TempDir b("rerun_b");
  const ExperimentConfig cfg = tiny_cfg();
  const RunArtifact ra = run_experiment(cfg, a.path);
  const RunArtifact rb = run_experiment(cfg, b.path);
  for (std::size_t i = 0; i < ra.seed_csvs.size(); ++i)
    CHECK(read_file(ra.seed_csvs[i]) == read_file(rb.seed_csvs[i]));
  CHECK(read_file(ra.summary_csv) == read_file(rb.summary_csv));
  CHECK(read_file(ra.plot_svg) == read_file(rb.plot_svg));
  CHECK(read_file(ra.resolved_config) == read_file(rb.resolved_config));
}

TEST_CASE("a failing replica leaves a marker and completed seed files") {
  TempDir tmp("partial");
  ExperimentConfig cfg = tiny_cfg();
  // block the second seed's csv: a directory squatting on the file name
  fs::create_directories(tmp.path + "/seed_2.csv");
  CHECK_THROWS_AS(run_experiment(cfg, tmp.path), IoError);
  CHECK(fs::exists(tmp.path + "/PARTIAL"));
  CHECK_FALSE(read_file(tmp.path + "/PARTIAL").empty());
  CHECK(fs::exists(tmp.path + "/seed_1.csv"));     // finished before the failure
  CHECK_FALSE(fs::exists(tmp.path + "/summary.csv"));
}

TEST_CASE("sweep trains one subdirectory per value and overlays the medians") {
  TempDir tmp("sweep");
  ExperimentConfig cfg = tiny_cfg();
  cfg.trainer.memory = MemoryMode::sem;
  cfg.trainer.m_capacity = 1;
  cfg.seeds = {1, 2};

  const auto arts = sweep(cfg, "lambda", {0.0, 0.5}, tmp.path);
  REQUIRE(arts.size() == 2);
  CHECK(arts[0].dir == tmp.path + "/lambda_0");
  CHECK(arts[1].dir == tmp.path + "/lambda_0.5");
  CHECK(fs::exists(tmp.path + "/overlay.svg"));
  CHECK(parse_config(arts[0].resolved_config).trainer.lambda == 0.0);
  CHECK(parse_config(arts[1].resolved_config).trainer.lambda == 0.5);

  // a sweep member is exactly an independent run at that value
  TempDir solo("sweep_solo");
  ExperimentConfig direct = cfg;
  direct.trainer.lambda = 0.5;
  const RunArtifact alone = run_experiment(direct, solo.path);
  CHECK(read_file(alone.seed_csvs[0]) == read_file(arts[1].seed_csvs[0]));
  CHECK(read_file(alone.summary_csv) == read_file(arts[1].summary_csv));

  CHECK_THROWS_AS(sweep(cfg, "gamma", {0.9}, tmp.path), ConfigError);
  CHECK_THROWS_AS(sweep(cfg, "lambda", {}, tmp.path), ConfigError);
  CHECK_THROWS_AS(sweep(cfg, "lambda", {2.0}, tmp.path), ConfigError);
}

TEST_CASE("compare_targets logs the target columns of the first seed") {
  TempDir tmp("targets");
  ExperimentConfig cfg = tiny_cfg();
  cfg.trainer.memory = MemoryMode::sem;
  cfg.trainer.m_capacity = 1;
  cfg.seeds = {7, 8};

  compare_targets(cfg, tmp.path);
  const CsvTable t = read_csv(tmp.path + "/targets.csv");
  CHECK(t.header ==
        std::vector<std::string>{"step", "mean_y", "mean_E_s", "mean_E_su"});

  // the rows mirror a plain training run of the first seed
  TrainerConfig tc = cfg.trainer;
  tc.seed = 7;
  const auto records = train(tc, cfg.env);
  REQUIRE(t.rows.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(t.col("step")[i] == static_cast<double>(records[i].step));
    CHECK(t.col("mean_y")[i] == records[i].mean_y);
    CHECK(t.col("mean_E_s")[i] == records[i].mean_E_s);
    CHECK(t.col("mean_E_su")[i] == records[i].mean_E_su);
  }

  // the state-action series only appears in saem mode
  CHECK(read_file(tmp.path + "/targets.svg").find("E_su") == std::string::npos);
  TempDir sa("targets_sa");
  ExperimentConfig sacfg = cfg;
  sacfg.trainer.memory = MemoryMode::saem;
  compare_targets(sacfg, sa.path);
  CHECK(read_file(sa.path + "/targets.svg").find("E_su") != std::string::npos);

  ExperimentConfig none = cfg;
  none.trainer.memory = MemoryMode::none;
  CHECK_THROWS_AS(compare_targets(none, tmp.path), ConfigError);
}

TEST_CASE("memory benchmark: one state table versus a family per joint action") {
  // 5 flushes of 5 items cycle through all 25 joint actions of 2x5 agents
  const BenchReport full = bench_memory(2, 5, 5, 5, 1000);
  CHECK(full.joint_action_space == 25);
  CHECK(full.distinct_actions_per_flush == 5);
  CHECK(full.sem_member_tables == 1);
  CHECK(full.saem_member_tables == 25);
  CHECK(full.sem_last_flush_touched == 1);
  CHECK(full.saem_last_flush_touched == 5);
  CHECK(full.touch_counters_match);
  CHECK(full.sem_entries == 25);   // workload keys never repeat
  CHECK(full.saem_entries == 25);
  CHECK(full.bytes_per_entry == 4 * sizeof(std::int64_t) + sizeof(TableEntry));
  CHECK(full.sem_projected_bytes == 1000 * full.bytes_per_entry);
  CHECK(full.saem_projected_bytes == 25 * full.sem_projected_bytes);
  CHECK(full.sem_total_ms >= 0.0);
  CHECK(full.saem_total_ms >= 0.0);

  // stopping earlier leaves the family partially populated
  CHECK(bench_memory(2, 5, 3, 5, 1000).saem_member_tables == 15);

  // a staging set larger than the joint space touches every member table
  const BenchReport wide = bench_memory(2, 2, 2, 10, 64);
  CHECK(wide.joint_action_space == 4);
  CHECK(wide.distinct_actions_per_flush == 4);
  CHECK(wide.saem_last_flush_touched == 4);
  CHECK(wide.saem_member_tables == 4);
  CHECK(wide.sem_entries == 20);
  CHECK(wide.saem_entries == 20);

  // astronomically large joint spaces saturate instead of overflowing
  CHECK(bench_memory(20, 70, 1, 3, 8).joint_action_space == 1000000000000000ULL);

  CHECK_THROWS_AS(bench_memory(0, 5, 1, 5, 10), ConfigError);
  CHECK_THROWS_AS(bench_memory(2, 5, 1, 0, 10), ConfigError);
}

TEST_CASE("bench report prints the headline numbers") {
  const BenchReport r = bench_memory(2, 5, 5, 5, 1000);
  std::ostringstream os;
  write_bench_report(os, r);
  const std::string text = os.str();
  CHECK(text.find("joint action space: 25") != std::string::npos);
  CHECK(text.find("state-action-keyed=25") != std::string::npos);
  CHECK(text.find("counters match") != std::string::npos);
}
