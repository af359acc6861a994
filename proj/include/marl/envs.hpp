#pragma once

// Toy cooperative environments with shared scalar reward, plus exact oracles
// for the optimal discounted return. All dynamics are driven by the seed
// passed to reset(), so (seed, action sequence) determines everything.

#include "marl/core.hpp"

#include <memory>
#include <variant>

namespace marl {

struct EnvSpec {
  std::string name;
  int n_agents = 0;
  int n_actions = 0;
  int obs_dim = 0;
  int state_dim = 0;
  int episode_limit = 0;
};

class Env {
 public:
  struct StepResult {
    double reward = 0.0;
    bool episode_over = false;  // no further steps accepted
    bool env_terminal = false;  // true termination; time-limit cuts stay false
  };

  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Vector state() const = 0;
  virtual Vector observe(int agent) const = 0;
  virtual StepResult step(const JointAction& action) = 0;
  virtual bool success() const = 0;
  // Fresh unstarted instance with the same configuration (evaluation runs
  // on a separate copy so training state is never disturbed).
  virtual std::unique_ptr<Env> fresh() const = 0;
};

// --- one-shot matrix game --------------------------------------------------

struct MatrixGameConfig {
  int n_agents = 2;
  int n_actions = 3;
  std::vector<double> payoff;  // row-major over joint actions

  double payoff_at(const JointAction& u) const;
  void validate() const;
};

// The classic climbing payoff: optimum 11 at (0,0), punished miscoordination.
MatrixGameConfig climbing_game();

// --- repeated lever coordination --------------------------------------------

struct LeverConfig {
  int n_agents = 2;
  int n_levers = 3;
  int episode_limit = 5;
  double cue_noise = 0.1;  // per-agent chance of observing a random cue

  void validate() const;
};

// --- predator-prey on a torus grid -------------------------------------------

struct PredatorPreyConfig {
  int width = 4;
  int height = 4;
  int n_predators = 2;
  int sight_radius = 2;
  int episode_limit = 20;
  double capture_reward = 10.0;
  double step_cost = 0.0;
  double shaping = 0.0;  // weight on negative predator-prey distances

  void validate() const;
};

using EnvConfig = std::variant<MatrixGameConfig, LeverConfig, PredatorPreyConfig>;

std::unique_ptr<Env> make_env(const EnvConfig& config);

// --- oracles -----------------------------------------------------------------

// Upper bound on the achievable discounted return, tight for the coordinated
// optimum: exhaustive enumeration for the one-shot and lever games, value
// iteration (optimistic over the prey's random walk, so realised returns can
// never exceed it) for predator-prey. Throws OracleInfeasibleError when the
// state-action space is too large to enumerate.
struct OracleResult {
  double optimal_return = 0.0;
  JointAction best_joint;  // filled for the one-shot game
};

OracleResult oracle_matrix(const MatrixGameConfig& cfg);
OracleResult oracle_lever(const LeverConfig& cfg, double gamma);
OracleResult oracle_predator(const PredatorPreyConfig& cfg, double gamma);
OracleResult oracle_for(const EnvConfig& cfg, double gamma);

}  // namespace marl
