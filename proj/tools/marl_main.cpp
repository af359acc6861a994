// Command-line front end: train / sweep / bench-memory / compare-targets /
// oracle. All heavy lifting lives in the library; this file is plumbing.

#include "CLI11.hpp"

#include "marl/config.hpp"
#include "marl/csv.hpp"
#include "marl/envs.hpp"
#include "marl/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

// Output directory precedence: --out flag, then [run] out from the config,
// then $MARL_OUT_ROOT/<config stem>, then runs/<config stem>.
std::string resolve_out(const std::string& flag_out,
                        const marl::ExperimentConfig& cfg,
                        const std::string& config_path) {
  if (!flag_out.empty()) return flag_out;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  const char* root = std::getenv("MARL_OUT_ROOT");
  const std::string stem = std::filesystem::path(config_path).stem().string();
  return std::string(root != nullptr ? root : "runs") + "/" + stem;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative multi-agent Q-learning with episodic-memory targets"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  bool timing = false;

  auto* train_cmd = app.add_subcommand("train", "train all seeds of one config");
  train_cmd->add_option("--config", config_path, "experiment config file")
      ->required();
  train_cmd->add_option("--out", out_flag, "output directory");
  train_cmd->add_flag("--timing", timing, "measure the wall_ms column");

  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run one experiment per parameter value");
  sweep_cmd->add_option("--config", config_path, "experiment config file")
      ->required();
  sweep_cmd
      ->add_option("--param", sweep_param,
                   "lambda | table_capacity | m_size | projection_dim")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "parameter values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--out", out_flag, "output directory");

  int bench_agents = 2;
  int bench_actions = 5;
  int bench_flushes = 20;
  std::size_t bench_mset = 5000;
  std::size_t bench_capacity = 1000000;
  auto* bench_cmd = app.add_subcommand(
      "bench-memory", "state table vs state-action tables on one workload");
  bench_cmd->add_option("--agents", bench_agents, "number of agents");
  bench_cmd->add_option("--actions", bench_actions, "actions per agent");
  bench_cmd->add_option("--flushes", bench_flushes, "number of flushes");
  bench_cmd->add_option("--mset", bench_mset, "staged items per flush");
  bench_cmd->add_option("--capacity", bench_capacity,
                        "capacity used for the storage projection");

  auto* targets_cmd = app.add_subcommand(
      "compare-targets", "log bootstrap vs episodic targets on one seed");
  targets_cmd->add_option("--config", config_path, "experiment config file")
      ->required();
  targets_cmd->add_option("--out", out_flag, "output directory");

  auto* oracle_cmd =
      app.add_subcommand("oracle", "print the optimal return for the env");
  oracle_cmd->add_option("--config", config_path, "experiment config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      marl::ExperimentConfig cfg = marl::parse_config(config_path);
      if (timing) cfg.timing = true;
      const std::string out = resolve_out(out_flag, cfg, config_path);
      const marl::RunArtifact art = marl::run_experiment(cfg, out);
      std::cout << "wrote " << art.seed_csvs.size() << " seed file(s), "
                << art.summary_csv << " and " << art.plot_svg << "\n";
    } else if (sweep_cmd->parsed()) {
      marl::ExperimentConfig cfg = marl::parse_config(config_path);
      const std::string out = resolve_out(out_flag, cfg, config_path);
      const auto arts = marl::sweep(cfg, sweep_param, sweep_values, out);
      std::cout << "wrote " << arts.size() << " run(s) under " << out << "\n";
    } else if (bench_cmd->parsed()) {
      const marl::BenchReport report = marl::bench_memory(
          bench_agents, bench_actions, bench_flushes, bench_mset,
          bench_capacity);
      marl::write_bench_report(std::cout, report);
    } else if (targets_cmd->parsed()) {
      marl::ExperimentConfig cfg = marl::parse_config(config_path);
      const std::string out = resolve_out(out_flag, cfg, config_path);
      marl::compare_targets(cfg, out);
      std::cout << "wrote " << out << "/targets.csv and " << out
                << "/targets.svg\n";
    } else if (oracle_cmd->parsed()) {
      const marl::ExperimentConfig cfg = marl::parse_config(config_path);
      const marl::OracleResult res =
          marl::oracle_for(cfg.env, cfg.trainer.gamma);
      std::cout << "optimal_return=" << marl::format_double(res.optimal_return);
      if (!res.best_joint.empty()) {
        std::cout << " best_joint=";
        for (std::size_t i = 0; i < res.best_joint.size(); ++i)
          std::cout << (i != 0 ? "," : "") << res.best_joint[i];
      }
      std::cout << "\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
