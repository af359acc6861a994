#pragma once

// Hand-rolled double-precision networks: batched dense layers, a gated
// recurrent cell, reverse-mode gradient accumulation, RMSProp and a central
// finite-difference gradient checker. Samples live in columns throughout.

#include "marl/core.hpp"

#include <functional>
#include <map>
#include <string>

namespace marl {

using ParameterSet = std::map<std::string, Matrix>;
using GradBuffer = std::map<std::string, Matrix>;

// -------------------------------------------------------------------------
// parameter registration / bookkeeping
// -------------------------------------------------------------------------

// Adds `name` with the given shape, filled uniformly from ±1/sqrt(fan_in).
void register_param(ParameterSet& params, const std::string& name, int rows,
                    int cols, int fan_in, std::mt19937_64& rng);
// Weight (out x in) plus bias (out x 1), both with fan_in = in.
void register_linear(ParameterSet& params, const std::string& prefix, int out,
                     int in, std::mt19937_64& rng);
void register_gru(ParameterSet& params, const std::string& prefix, int hidden,
                  int in, std::mt19937_64& rng);

GradBuffer zeros_like(const ParameterSet& params);
void check_finite(const ParameterSet& params, const std::string& what);
void check_finite(const Matrix& m, const std::string& what);

// Deep copy; the target keeps its values until the next explicit sync.
ParameterSet sync_target(const ParameterSet& params);

// FNV-1a over the raw tensor bytes in name order; used by determinism tests.
std::uint64_t hash_params(const ParameterSet& params);

// -------------------------------------------------------------------------
// layers (X has one sample per column)
// -------------------------------------------------------------------------

Matrix linear_forward(const Matrix& W, const Matrix& b, const Matrix& X);
// Accumulates dW/db and returns dX.
Matrix linear_backward(const Matrix& W, const Matrix& X, const Matrix& dY,
                       Matrix& dW, Matrix& db);

Matrix relu(const Matrix& pre);
Matrix relu_backward(const Matrix& pre, const Matrix& dY);
Matrix elu(const Matrix& pre);
Matrix elu_backward(const Matrix& pre, const Matrix& dY);

struct GruCache {
  Matrix x, h_in, z, r, c, rh;
};

// Standard update/reset/candidate gating; zero input, zero hidden and zero
// parameters map to a zero next hidden state.
Matrix gru_forward(const ParameterSet& params, const std::string& prefix,
                   const Matrix& X, const Matrix& H, GruCache& cache);
// Returns dX; dH_in is accumulated into `dh_in`.
Matrix gru_backward(const ParameterSet& params, const std::string& prefix,
                    const GruCache& cache, const Matrix& dH_out, GradBuffer& g,
                    Matrix& dh_in);

// -------------------------------------------------------------------------
// the shared per-agent network: 2x ReLU encoder, optional GRU, linear head
// -------------------------------------------------------------------------

struct AgentNetConfig {
  int input_dim = 0;
  int n_actions = 0;
  int hidden = 64;
  bool recurrent = false;
};

struct AgentStepCache {
  Matrix x, pre1, h1, pre2, h2, feat;
  GruCache gru;
};

ParameterSet make_agent_params(const AgentNetConfig& cfg, std::mt19937_64& rng);

// One time slice for all (episode, agent) columns. H is ignored (and left
// empty) for feed-forward configurations.
Matrix agent_forward(const ParameterSet& params, const AgentNetConfig& cfg,
                     const Matrix& X, Matrix& H, AgentStepCache& cache);
// dH_out carries the hidden-state gradient arriving from the following time
// step (empty matrix when there is none); returns the gradient to H_in.
Matrix agent_backward(const ParameterSet& params, const AgentNetConfig& cfg,
                      const AgentStepCache& cache, const Matrix& dAllQ,
                      const Matrix& dH_out, GradBuffer& g);

// -------------------------------------------------------------------------
// plain MLP head (used by the central critic): 2x ReLU + scalar output
// -------------------------------------------------------------------------

struct MlpCache {
  Matrix x, pre1, h1, pre2, h2;
};

ParameterSet make_mlp_params(const std::string& prefix, int in, int hidden,
                             int out, std::mt19937_64& rng);
Matrix mlp_forward(const ParameterSet& params, const std::string& prefix,
                   const Matrix& X, MlpCache& cache);
Matrix mlp_backward(const ParameterSet& params, const std::string& prefix,
                    const MlpCache& cache, const Matrix& dY, GradBuffer& g);

// -------------------------------------------------------------------------
// optimisation
// -------------------------------------------------------------------------

class RmsProp {
 public:
  RmsProp(double lr = 5e-4, double decay = 0.99, double eps = 1e-5);
  // v <- decay*v + (1-decay)*g^2 ; p <- p - lr*g/sqrt(v + eps)
  void step(ParameterSet& params, const GradBuffer& grads);
  double lr() const { return lr_; }
  const std::map<std::string, Matrix>& second_moment() const { return v_; }

 private:
  double lr_, decay_, eps_;
  std::map<std::string, Matrix> v_;
};

// -------------------------------------------------------------------------
// gradient checking
// -------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences per coordinate against `analytic`; relative error is
// |a - n| / max(1, |a|, |n|).
GradCheckReport grad_check(const std::function<double(const ParameterSet&)>& loss,
                           const ParameterSet& at, const GradBuffer& analytic,
                           double fd_step = 1e-5);

// Column-wise max with first-index tie breaking (lowest action wins).
void colwise_max(const Matrix& q, std::vector<int>* argmax, Vector* maxval);

}  // namespace marl
