#pragma once

// Training loop tying everything together: epsilon-greedy rollouts, episodic
// return staging, table flushes, target computation under the frozen copy of
// the networks, the blended TD/episodic loss and RMSProp updates.
//
// The blended residual is written as d_y + lambda*(d_E - d_y), which is
// algebraically (1-lambda)*d_y + lambda*d_E but collapses bit-for-bit onto
// the plain TD residual whenever lambda == 0 or y == E. That exactness is
// load-bearing: a memory-augmented run with lambda 0 must be indistinguishable
// from the vanilla learner, and terminal steps (where both targets equal the
// reward) must contribute identical gradients in paired runs.

#include "marl/envs.hpp"
#include "marl/memory.hpp"
#include "marl/mixers.hpp"
#include "marl/neural.hpp"

#include <functional>
#include <limits>

namespace marl {

enum class MixerKind { vdn, qmix, wqmix };
enum class MemoryMode { none, sem, saem };

const char* to_string(MixerKind kind);
const char* to_string(MemoryMode mode);

struct TrainerConfig {
  MixerKind mixer = MixerKind::vdn;
  MemoryMode memory = MemoryMode::none;
  double lambda = 0.1;  // weight of the episodic term; forced to 0 without memory
  double alpha = 0.75;  // down-weight for non-optimistic samples (weighted mixer)
  double gamma = 0.99;

  int batch_size = 32;
  int buffer_capacity = 5000;
  int sync_period = 200;  // episodes between hard target syncs
  long long total_steps = 20000;
  long long eval_interval = 10000;
  int eval_episodes = 32;
  EpsilonSchedule epsilon{1.0, 0.05, 5000};
  int updates_per_episode = 1;

  std::size_t table_capacity = 1000000;
  std::size_t m_capacity = 5000;
  int projection_dim = 4;
  double key_resolution = 1e-6;
  bool use_projection = true;

  int agent_hidden = 64;
  int mix_embed = 32;
  int critic_hidden = 64;
  bool recurrent = false;
  bool append_agent_id = true;

  double lr = 5e-4;
  double rms_decay = 0.99;
  double rms_eps = 1e-5;
  std::uint64_t seed = 1;

  void validate() const;
  double effective_lambda() const {
    return memory == MemoryMode::none ? 0.0 : lambda;
  }
};

// One row per evaluation point. Only the fields mirrored in the metrics CSV
// are part of the stable output schema; the trailing diagnostics are for
// in-process consumers.
struct MetricsRecord {
  long long step = 0;
  long long episode = 0;
  double loss = 0.0;       // mean training loss since the previous record
  double mean_y = 0.0;     // masked batch means since the previous record
  double mean_E_s = 0.0;
  double mean_E_su = 0.0;
  double eval_return_mean = 0.0;
  double eval_success_rate = 0.0;
  std::size_t table_size = 0;
  std::uint64_t table_hits = 0;    // lookups since the previous record
  std::uint64_t table_misses = 0;
  double wall_ms = 0.0;

  double max_hit_E = -std::numeric_limits<double>::infinity();
  double hit_rate = 0.0;
  long long updates = 0;
};

struct TrainState {
  TrainerConfig cfg;
  EnvConfig env_cfg;
  EnvSpec env_spec;
  AgentNetConfig agent_cfg;
  QmixConfig mix_cfg;

  ParameterSet params;
  ParameterSet target;
  RmsProp opt;
  ReplayBuffer buffer;
  ReturnSet mset;
  SemTable sem;    // loss table in sem mode, diagnostics-only in saem mode
  SaemTable saem;
  Matrix projection;  // empty when bypassed

  std::unique_ptr<Env> env;
  std::mt19937_64 env_rng, explore_rng, sample_rng;
  long long step = 0;
  long long episode = 0;

  // rolling accumulators between metric records
  double win_loss = 0.0, win_y = 0.0, win_e_s = 0.0, win_e_su = 0.0;
  long long win_updates = 0, win_target_steps = 0;
  double win_max_hit_e = -std::numeric_limits<double>::infinity();
  std::uint64_t win_hits_base = 0, win_misses_base = 0;

  TrainState(const TrainerConfig& c, const EnvConfig& e);
};

TrainState make_train_state(const TrainerConfig& cfg, const EnvConfig& env_cfg);

// Builds [obs ; one-hot(agent)] columns for one time slice.
Matrix build_agent_input(const Matrix& obs, int n_agents, bool append_agent_id);

// Greedy utilities for one set of per-agent observations (used by rollouts,
// evaluation and policy probes). `hidden` is carried across calls for
// recurrent configurations; pass an empty matrix at episode starts.
Matrix agent_q_values(const ParameterSet& params, const AgentNetConfig& cfg,
                      const std::vector<Vector>& obs, bool append_agent_id,
                      Matrix& hidden);

// Per-agent epsilon-greedy over an n_actions x n_agents utility matrix.
JointAction select_actions(const Matrix& all_q, double eps,
                           std::mt19937_64& rng);

// Rolls one training episode: steps the environment, advances the global
// step counter, stages discounted returns into the staging set in reverse
// time order and flushes the tables the moment the set fills.
Episode run_episode(TrainState& s);

struct Targets {
  Matrix y;       // batch x t_max
  Matrix e;       // episodic target used by the loss (zeros without memory)
  Matrix e_diag;  // state-table target logged in saem mode
  Matrix w;       // weighted-mixer weights (wqmix only)
  Matrix w_e;
  double sum_y = 0.0, sum_e = 0.0, sum_e_diag = 0.0;
  long long masked_steps = 0;
  double max_hit_e = -std::numeric_limits<double>::infinity();
};

// All target-side quantities are computed under the frozen parameters, so
// they are constants with respect to the live networks.
Targets compute_targets(TrainState& s, const Batch& batch);

struct LossResult {
  double loss = 0.0;
  GradBuffer grads;
};

// Masked sum over batch entries (outer) and steps (inner) of the blended
// squared residuals; targets are data. Taking the parameters explicitly lets
// finite-difference checks re-evaluate the loss at perturbed points.
LossResult loss_and_grads(const ParameterSet& params, const TrainerConfig& cfg,
                          const AgentNetConfig& agent_cfg,
                          const QmixConfig& mix_cfg, const Batch& batch,
                          const Targets& targets);
LossResult loss_and_grads(const TrainState& s, const Batch& batch,
                          const Targets& targets);

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;
};

// Greedy evaluation on a fresh environment instance; never touches training
// state (RNG streams, buffer, tables or counters).
EvalResult evaluate(const TrainState& s, long long eval_round);

struct TrainHooks {
  std::function<void(const TrainState&)> after_update;
  std::function<void(const TrainState&)> after_episode;
};

std::vector<MetricsRecord> train(const TrainerConfig& cfg,
                                 const EnvConfig& env_cfg,
                                 const TrainHooks& hooks = {});

}  // namespace marl
