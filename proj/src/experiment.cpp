#include "marl/experiment.hpp"

#include "marl/csv.hpp"
#include "marl/memory.hpp"
#include "marl/svg.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace marl {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string resolved_snapshot(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_resolved_config(os, cfg);
  return os.str();
}

// Cross-seed percentiles per evaluation point, over the record range every
// seed reached. Step counts may drift apart on variable-length episodes, so
// rows are aligned by record index and located at the median step.
std::vector<std::vector<double>> summarize(
    const std::vector<std::vector<MetricsRecord>>& runs) {
  std::size_t common = runs.empty() ? 0 : runs.front().size();
  for (const auto& r : runs) common = std::min(common, r.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < common; ++i) {
    std::vector<double> steps, returns;
    for (const auto& r : runs) {
      steps.push_back(static_cast<double>(r[i].step));
      returns.push_back(r[i].eval_return_mean);
    }
    rows.push_back({static_cast<double>(i), percentile(steps, 0.5),
                    percentile(returns, 0.5), percentile(returns, 0.25),
                    percentile(returns, 0.75)});
  }
  return rows;
}

const std::vector<std::string> kSummaryHeader = {
    "record", "step_median", "eval_return_median", "eval_return_p25",
    "eval_return_p75"};

PlotSeries summary_series(const std::vector<std::vector<double>>& rows,
                          const std::string& label) {
  PlotSeries s;
  s.label = label;
  for (const auto& row : rows) {
    s.x.push_back(row[1]);
    s.y.push_back(row[2]);
    s.lo.push_back(row[3]);
    s.hi.push_back(row[4]);
  }
  return s;
}

}  // namespace

RunArtifact run_experiment(const ExperimentConfig& cfg,
                           const std::string& out_dir) {
  ensure_dir(out_dir);
  RunArtifact art;
  art.dir = out_dir;
  art.resolved_config = out_dir + "/config_resolved.ini";
  write_text(art.resolved_config, resolved_snapshot(cfg));

  std::vector<std::vector<MetricsRecord>> runs;
  try {
    for (std::uint64_t seed : cfg.seeds) {
      TrainerConfig t = cfg.trainer;
      t.seed = seed;
      runs.push_back(train(t, cfg.env));
      const std::string path =
          out_dir + "/seed_" + std::to_string(seed) + ".csv";
      write_metrics_csv(path, runs.back(), cfg.timing);
      art.seed_csvs.push_back(path);
    }
  } catch (const std::exception& err) {
    // Partial-artifact marker: completed seed files stay, the marker names
    // the failure, and the error still propagates as a non-zero exit.
    write_text(out_dir + "/PARTIAL", std::string(err.what()) + "\n");
    throw;
  }

  const auto rows = summarize(runs);
  art.summary_csv = out_dir + "/summary.csv";
  write_csv(art.summary_csv, kSummaryHeader, rows);
  art.plot_svg = out_dir + "/curve.svg";
  write_line_plot_svg(art.plot_svg, "evaluation return", "environment steps",
                      "mean evaluation return",
                      {summary_series(rows, "median (25-75%)")});
  return art;
}

std::vector<RunArtifact> sweep(const ExperimentConfig& base,
                               const std::string& param,
                               const std::vector<double>& values,
                               const std::string& out_dir) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  ensure_dir(out_dir);
  std::vector<RunArtifact> arts;
  std::vector<PlotSeries> overlay;
  for (double v : values) {
    ExperimentConfig cfg = base;
    if (param == "lambda") {
      cfg.trainer.lambda = v;
    } else if (param == "table_capacity") {
      cfg.trainer.table_capacity = static_cast<std::size_t>(v);
    } else if (param == "m_size") {
      cfg.trainer.m_capacity = static_cast<std::size_t>(v);
    } else if (param == "projection_dim") {
      cfg.trainer.projection_dim = static_cast<int>(v);
    } else {
      throw ConfigError(
          "sweep: parameter must be one of lambda, table_capacity, m_size, "
          "projection_dim");
    }
    cfg.trainer.validate();
    const std::string label = param + "=" + format_double(v);
    const std::string dir = out_dir + "/" + param + "_" + format_double(v);
    arts.push_back(run_experiment(cfg, dir));
    const CsvTable summary = read_csv(arts.back().summary_csv);
    PlotSeries s;
    s.label = label;
    s.x = summary.col("step_median");
    s.y = summary.col("eval_return_median");
    overlay.push_back(std::move(s));
  }
  write_line_plot_svg(out_dir + "/overlay.svg", "sweep over " + param,
                      "environment steps", "median evaluation return",
                      overlay);
  return arts;
}

void compare_targets(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.trainer.memory == MemoryMode::none)
    throw ConfigError(
        "compare-targets needs an active memory mode (sem or saem)");
  ensure_dir(out_dir);
  write_text(out_dir + "/config_resolved.ini", resolved_snapshot(cfg));

  TrainerConfig t = cfg.trainer;
  t.seed = cfg.seeds.front();
  const std::vector<MetricsRecord> records = train(t, cfg.env);

  std::vector<std::vector<double>> rows;
  for (const MetricsRecord& r : records)
    rows.push_back({static_cast<double>(r.step), r.mean_y, r.mean_E_s,
                    r.mean_E_su});
  write_csv(out_dir + "/targets.csv",
            {"step", "mean_y", "mean_E_s", "mean_E_su"}, rows);

  std::vector<PlotSeries> series(2);
  series[0].label = "y (bootstrap)";
  series[1].label = "E_s (state table)";
  for (const auto& row : rows) {
    series[0].x.push_back(row[0]);
    series[0].y.push_back(row[1]);
    series[1].x.push_back(row[0]);
    series[1].y.push_back(row[2]);
  }
  if (cfg.trainer.memory == MemoryMode::saem) {
    PlotSeries su;
    su.label = "E_su (state-action tables)";
    for (const auto& row : rows) {
      su.x.push_back(row[0]);
      su.y.push_back(row[3]);
    }
    series.push_back(std::move(su));
  }
  write_line_plot_svg(out_dir + "/targets.svg", "target comparison",
                      "environment steps", "mean target value", series);
}

namespace {

std::size_t saturating_pow(std::size_t base, int exp) {
  constexpr std::size_t kCap = 1000000000000000ULL;  // 1e15
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > kCap / base) return kCap;
    out *= base;
  }
  return out;
}

JointAction decode_joint(std::size_t index, int n_agents, int n_actions) {
  JointAction u(n_agents);
  for (int a = 0; a < n_agents; ++a) {
    u[a] = static_cast<int>(index % static_cast<std::size_t>(n_actions));
    index /= static_cast<std::size_t>(n_actions);
  }
  return u;
}

}  // namespace

BenchReport bench_memory(int n_agents, int n_actions, int flushes,
                         std::size_t m_size, std::size_t projected_capacity,
                         int key_dim) {
  if (n_agents < 1 || n_actions < 1 || flushes < 1 || m_size == 0 ||
      key_dim < 1 || projected_capacity == 0)
    throw ConfigError("bench-memory: all workload parameters must be positive");

  BenchReport r;
  r.n_agents = n_agents;
  r.n_actions = n_actions;
  r.m_size = m_size;
  r.flushes = flushes;
  r.joint_action_space = saturating_pow(static_cast<std::size_t>(n_actions),
                                        n_agents);
  r.distinct_actions_per_flush = std::min(m_size, r.joint_action_space);
  r.projected_capacity = projected_capacity;

  // Capacity covers the whole workload so no eviction noise enters timings.
  const std::size_t capacity = static_cast<std::size_t>(flushes) * m_size + 1;
  SemTable sem(capacity);
  SaemTable saem(capacity);

  r.touch_counters_match = true;
  std::size_t next_key = 0;
  for (int f = 0; f < flushes; ++f) {
    // Adversarial staging: unique keys, joint actions cycling through the
    // whole space so a flush touches as many member tables as possible.
    std::vector<MItem> items(m_size);
    std::set<JointAction> distinct;
    for (std::size_t i = 0; i < m_size; ++i) {
      MItem& item = items[i];
      item.key.q.resize(key_dim);
      for (int d = 0; d < key_dim; ++d)
        item.key.q[d] = static_cast<std::int64_t>(
            splitmix64(next_key * static_cast<std::size_t>(key_dim) + d));
      item.action = decode_joint(next_key % r.joint_action_space, n_agents,
                                 n_actions);
      item.ret = static_cast<double>(splitmix64(next_key) % 1000) / 10.0;
      distinct.insert(item.action);
      ++next_key;
    }

    const auto t0 = std::chrono::steady_clock::now();
    sem.flush(items);
    const auto t1 = std::chrono::steady_clock::now();
    saem.flush(items);
    const auto t2 = std::chrono::steady_clock::now();
    r.sem_total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    r.saem_total_ms += std::chrono::duration<double, std::milli>(t2 - t1).count();

    if (sem.last_flush_tables_touched() != 1 ||
        saem.last_flush_tables_touched() != distinct.size())
      r.touch_counters_match = false;
    r.sem_last_flush_touched = sem.last_flush_tables_touched();
    r.saem_last_flush_touched = saem.last_flush_tables_touched();
  }

  r.sem_member_tables = 1;
  r.saem_member_tables = saem.member_tables();
  r.sem_entries = sem.size();
  r.saem_entries = saem.total_entries();
  r.bytes_per_entry = static_cast<std::size_t>(key_dim) * sizeof(std::int64_t) +
                      sizeof(TableEntry);
  r.sem_projected_bytes = r.bytes_per_entry * projected_capacity;
  r.saem_projected_bytes =
      r.bytes_per_entry * projected_capacity * r.joint_action_space;
  return r;
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  out << "workload: n_agents=" << r.n_agents << " n_actions=" << r.n_actions
      << " |M|=" << r.m_size << " flushes=" << r.flushes << "\n";
  out << "joint action space: " << r.joint_action_space
      << " (distinct actions per flush: " << r.distinct_actions_per_flush
      << ")\n";
  out << "member tables: state-keyed=" << r.sem_member_tables
      << " state-action-keyed=" << r.saem_member_tables << "\n";
  out << "last flush touched: state-keyed=" << r.sem_last_flush_touched
      << " state-action-keyed=" << r.saem_last_flush_touched
      << " (instrumented counters "
      << (r.touch_counters_match ? "match" : "MISMATCH") << ")\n";
  out << "entries stored: state-keyed=" << r.sem_entries
      << " state-action-keyed=" << r.saem_entries << "\n";
  out << "bytes per entry (key + value payload): " << r.bytes_per_entry << "\n";
  out << "projected storage at capacity " << r.projected_capacity
      << ": state-keyed=" << r.sem_projected_bytes
      << " B, state-action-keyed=" << r.saem_projected_bytes << " B ("
      << r.joint_action_space << " tables)\n";
  out << "flush wall time total: state-keyed=" << format_double(r.sem_total_ms)
      << " ms, state-action-keyed=" << format_double(r.saem_total_ms)
      << " ms\n";
}

}  // namespace marl
