#pragma once

// Experiment orchestration on top of the training loop: multi-seed runs with
// summaries and plots, hyper-parameter sweeps, target-comparison reports and
// the state-table vs state-action-table benchmark.

#include "marl/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace marl {

struct RunArtifact {
  std::string dir;
  std::vector<std::string> seed_csvs;
  std::string summary_csv;
  std::string plot_svg;
  std::string resolved_config;
};

// Trains one replica per seed, then writes seed_<s>.csv files, summary.csv
// (per evaluation point: median step, median and 25-75% percentile return)
// and curve.svg. A replica failure leaves a PARTIAL marker file and rethrows.
RunArtifact run_experiment(const ExperimentConfig& cfg,
                           const std::string& out_dir);

// One run_experiment per value of `param` (lambda, table_capacity, m_size or
// projection_dim), each in <out>/<param>_<value>/, plus overlay.svg of the
// median curves.
std::vector<RunArtifact> sweep(const ExperimentConfig& base,
                               const std::string& param,
                               const std::vector<double>& values,
                               const std::string& out_dir);

// Single-seed run (first seed) that logs the bootstrap target next to the
// episodic targets; writes targets.csv (step, mean_y, mean_E_s, mean_E_su)
// and targets.svg. Requires an active memory mode.
void compare_targets(const ExperimentConfig& cfg, const std::string& out_dir);

struct BenchReport {
  int n_agents = 0;
  int n_actions = 0;
  std::size_t m_size = 0;
  int flushes = 0;
  std::size_t joint_action_space = 0;  // |U|^n, saturated at 1e15
  std::size_t distinct_actions_per_flush = 0;

  std::size_t sem_member_tables = 0;  // structurally 1
  std::size_t saem_member_tables = 0;
  std::uint64_t sem_last_flush_touched = 0;
  std::uint64_t saem_last_flush_touched = 0;
  bool touch_counters_match = false;  // instrumented == recounted, every flush
  std::size_t sem_entries = 0;
  std::size_t saem_entries = 0;

  std::size_t bytes_per_entry = 0;  // key payload + value/metadata payload
  std::size_t projected_capacity = 0;
  std::size_t sem_projected_bytes = 0;
  std::size_t saem_projected_bytes = 0;  // one full table per joint action

  double sem_total_ms = 0.0;  // summed over all flushes
  double saem_total_ms = 0.0;
};

// Identical synthetic workloads (same keys, same returns, every item carrying
// a distinct-as-possible joint action) flushed into one state table and one
// state-action family.
BenchReport bench_memory(int n_agents, int n_actions, int flushes,
                         std::size_t m_size, std::size_t projected_capacity,
                         int key_dim = 4);

void write_bench_report(std::ostream& out, const BenchReport& r);

}  // namespace marl
