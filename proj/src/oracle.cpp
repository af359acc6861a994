#include "marl/envs.hpp"

#include "grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace marl {

OracleResult oracle_matrix(const MatrixGameConfig& cfg) {
  cfg.validate();
  // Exhaustive scan of the payoff tensor.
  std::size_t best_idx = 0;
  for (std::size_t i = 1; i < cfg.payoff.size(); ++i)
    if (cfg.payoff[i] > cfg.payoff[best_idx]) best_idx = i;
  OracleResult res;
  res.optimal_return = cfg.payoff[best_idx];
  res.best_joint.assign(cfg.n_agents, 0);
  std::size_t rem = best_idx;
  for (int a = cfg.n_agents - 1; a >= 0; --a) {
    res.best_joint[a] = static_cast<int>(rem % cfg.n_actions);
    rem /= static_cast<std::size_t>(cfg.n_actions);
  }
  return res;
}

OracleResult oracle_lever(const LeverConfig& cfg, double gamma) {
  cfg.validate();
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("oracle: gamma out of range");
  double joint_count = std::pow(static_cast<double>(cfg.n_levers),
                                static_cast<double>(cfg.n_agents));
  if (joint_count > 1e6)
    throw OracleInfeasibleError("lever oracle: joint action space too large");
  // Enumerate first-step joint actions for every possible correct lever; the
  // single unit of reward cannot beat an immediate coordinated pull.
  double best = 0.0;
  const auto total = static_cast<std::size_t>(joint_count);
  for (int c = 0; c < cfg.n_levers; ++c) {
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t rem = code;
      bool coordinated = true;
      for (int a = 0; a < cfg.n_agents; ++a) {
        if (static_cast<int>(rem % cfg.n_levers) != c) coordinated = false;
        rem /= static_cast<std::size_t>(cfg.n_levers);
      }
      if (coordinated) best = std::max(best, 1.0);
    }
  }
  return {best, {}};
}

OracleResult oracle_predator(const PredatorPreyConfig& cfg, double gamma) {
  cfg.validate();
  if (gamma < 0.0 || gamma >= 1.0)
    throw ConfigError("predator-prey oracle: needs gamma in [0,1)");
  const int cells = cfg.width * cfg.height;
  const int n = cfg.n_predators;

  double state_count = std::pow(static_cast<double>(cells),
                                static_cast<double>(n + 1));
  double joint_count = std::pow(5.0, static_cast<double>(n));
  if (state_count * joint_count > 1.5e6)
    throw OracleInfeasibleError(
        "predator-prey oracle: state-action space too large to enumerate");
  const auto n_states = static_cast<std::size_t>(state_count);
  const auto n_joint = static_cast<std::size_t>(joint_count);

  // prey successor cells, one row per current prey cell
  std::vector<std::array<int, 5>> prey_next(cells);
  for (int c = 0; c < cells; ++c)
    for (int m = 0; m < 5; ++m)
      prey_next[c][m] = pp::move_cell(c, m, cfg.width, cfg.height);

  // For each (state, joint action): the post-move predator block index, or
  // capture. Rewards are constant unless shaping couples them to prey moves.
  struct Edge {
    std::int64_t pred_base = -1;  // -1 marks capture
    double reward = 0.0;
  };
  std::vector<Edge> edges(n_states * n_joint);
  std::vector<int> preds(n), moved(n), joint(n);
  for (std::size_t s = 0; s < n_states; ++s) {
    std::size_t rem = s;
    const int prey = static_cast<int>(rem % cells);
    rem /= cells;
    for (int a = n - 1; a >= 0; --a) {
      preds[a] = static_cast<int>(rem % cells);
      rem /= cells;
    }
    for (std::size_t j = 0; j < n_joint; ++j) {
      std::size_t jrem = j;
      for (int a = n - 1; a >= 0; --a) {
        joint[a] = static_cast<int>(jrem % 5);
        jrem /= 5;
      }
      for (int a = 0; a < n; ++a)
        moved[a] = pp::move_cell(preds[a], joint[a], cfg.width, cfg.height);
      const bool captured = std::all_of(moved.begin(), moved.end(),
                                        [&](int p) { return p == prey; });
      Edge& e = edges[s * n_joint + j];
      if (captured) {
        e.pred_base = -1;
        e.reward = cfg.step_cost + cfg.capture_reward;
      } else {
        std::int64_t base = 0;
        for (int a = 0; a < n; ++a) base = base * cells + moved[a];
        e.pred_base = base * cells;
        e.reward = cfg.step_cost;  // shaping joins per prey move during sweeps
      }
    }
  }

  // Optimistic value iteration: the prey branch is maximised, not averaged,
  // so no realised rollout return can exceed the fixed point.
  std::vector<double> value(n_states, 0.0);
  std::vector<int> ps(n);
  const int min_sweeps = cfg.episode_limit;
  const int max_sweeps = 100000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
      const int prey = static_cast<int>(s % cells);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n_joint; ++j) {
        const Edge& e = edges[s * n_joint + j];
        double candidate;
        if (e.pred_base < 0) {
          candidate = e.reward;
        } else {
          // shaping is paid with the step reward, after the prey has moved
          double best_branch = -std::numeric_limits<double>::infinity();
          for (int m = 0; m < 5; ++m) {
            const int prey2 = prey_next[prey][m];
            double branch =
                gamma * value[static_cast<std::size_t>(e.pred_base) + prey2];
            if (cfg.shaping != 0.0) {
              std::int64_t rem2 = e.pred_base / cells;
              for (int a = n - 1; a >= 0; --a) {
                ps[a] = static_cast<int>(rem2 % cells);
                rem2 /= cells;
              }
              branch += pp::shaping_term(cfg, ps, prey2);
            }
            best_branch = std::max(best_branch, branch);
          }
          candidate = e.reward + best_branch;
        }
        best = std::max(best, candidate);
      }
      delta = std::max(delta, std::abs(best - value[s]));
      value[s] = best;
    }
    if (sweep + 1 >= min_sweeps && delta < 1e-12) break;
  }
  return {*std::max_element(value.begin(), value.end()), {}};
}

OracleResult oracle_for(const EnvConfig& cfg, double gamma) {
  return std::visit(
      [gamma](const auto& c) -> OracleResult {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MatrixGameConfig>)
          return oracle_matrix(c);
        else if constexpr (std::is_same_v<T, LeverConfig>)
          return oracle_lever(c, gamma);
        else
          return oracle_predator(c, gamma);
      },
      cfg);
}

}  // namespace marl
