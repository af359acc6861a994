#pragma once

// Core data plumbing shared by every module: episode containers, the FIFO
// replay buffer, exploration schedule, discounted returns and batch padding.

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace marl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using JointAction = std::vector<int>;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyEpisodeError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct InvalidActionError : Error { using Error::Error; };
struct EpisodeOverError : Error { using Error::Error; };
struct OracleInfeasibleError : Error { using Error::Error; };
struct NumericsError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// One environment step as seen by the learner. `terminal` is true only for a
// genuine environment termination; an episode cut off by the time limit keeps
// terminal=false so the learner still bootstraps past it.
struct Transition {
  std::vector<Vector> obs;   // one observation per agent
  Vector state;              // global state (centralised information)
  JointAction action;
  double reward = 0.0;
  bool terminal = false;
};

struct Episode {
  std::vector<Transition> steps;
  std::vector<Vector> final_obs;  // observations after the last step
  Vector final_state;             // state after the last step
  std::uint64_t seed = 0;
  bool success = false;

  int length() const { return static_cast<int>(steps.size()); }
};

// Suffix discounted returns: R_t = r_t + gamma * R_{t+1}, R_T = r_T.
std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma);

// Linear exploration schedule: anneals from `start` to `end` over
// `anneal_steps` environment steps, constant afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long long anneal_steps = 50000;

  double at(long long step) const;
};

// FIFO episode store with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  }

  void store(Episode ep);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Episode& at(std::size_t i) const { return episodes_.at(i); }

  // Fewer than `batch` stored episodes means the caller is not ready to
  // train yet; that case is reported as nullopt rather than an error.
  std::optional<std::vector<Episode>> sample(std::size_t batch,
                                             std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

// Zero-padded time-major batch. Slot t of `obs`/`state` holds the pre-step
// data of step t; slot `t_max` carries the post-episode observation so the
// last real step of a full-length episode can still bootstrap.
// Agent a of batch entry b lives in column b*n_agents + a.
struct Batch {
  int batch = 0;
  int n_agents = 0;
  int t_max = 0;
  std::vector<Matrix> obs;    // t_max+1 slots, obs_dim x (batch*n_agents)
  std::vector<Matrix> state;  // t_max+1 slots, state_dim x batch
  std::vector<std::vector<JointAction>> actions;  // [t][b]
  Matrix reward;    // batch x t_max
  Matrix terminal;  // batch x t_max, 1.0 on env-terminal steps
  Matrix mask;      // batch x t_max, 1.0 on real steps
  std::vector<int> lengths;
};

Batch pad_batch(const std::vector<Episode>& episodes);

// Deterministic stream splitting so independent RNG consumers (environment,
// exploration, init, ...) never share a sequence.
std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream);

// Uniform integer in [0, n).
int draw_index(std::mt19937_64& rng, int n);

}  // namespace marl
