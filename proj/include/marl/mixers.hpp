#pragma once

// Joint-value mixers. VDN sums per-agent utilities; QMIX mixes them through a
// state-conditioned monotonic network (hypernetworks emit absolute-valued
// weights, so dQ_tot/dQ_a >= 0 and the per-agent argmax realises the joint
// argmax). The weighted variant adds an unrestricted central critic over
// state and one-hot joint action.

#include "marl/neural.hpp"

namespace marl {

// --- VDN ---------------------------------------------------------------

// chosen_q: n_agents x B. Returns 1 x B.
Matrix vdn_mix(const Matrix& chosen_q);
Matrix vdn_backward(const Matrix& dQtot, int n_agents);

// --- QMIX --------------------------------------------------------------

struct QmixConfig {
  int n_agents = 0;
  int state_dim = 0;
  int embed = 32;
};

struct QmixCache {
  Matrix state, q;
  Matrix w1_pre, b1, h_pre, h;
  Matrix w2_pre, v_pre, v_h, b2;
};

ParameterSet make_qmix_params(const QmixConfig& cfg, std::mt19937_64& rng);

// state: F x B, chosen_q: n x B. Returns 1 x B.
Matrix qmix_mix(const ParameterSet& params, const QmixConfig& cfg,
                const Matrix& state, const Matrix& chosen_q, QmixCache& cache);
// Accumulates hypernetwork gradients and returns dQ (n x B).
Matrix qmix_backward(const ParameterSet& params, const QmixConfig& cfg,
                     const QmixCache& cache, const Matrix& dQtot,
                     GradBuffer& g);

// --- central critic (weighted QMIX) --------------------------------------

// [state ; one-hot(u_1) ; ... ; one-hot(u_n)] column per sample.
Matrix critic_input(const Matrix& state, const std::vector<JointAction>& actions,
                    int n_actions);

// --- weighting -----------------------------------------------------------

// w(s,u): 1 when the TD target beats the critic's value at the greedy joint
// action or the sampled action is that greedy action; alpha otherwise.
double wqmix_weight(double y, double qhat_at_ustar, const JointAction& u,
                    const JointAction& u_star, double alpha);
// Same rule with the episodic target in place of y.
double wqmix_weight_em(double e, double qhat_at_ustar, const JointAction& u,
                       const JointAction& u_star, double alpha);

// --- joint argmax ----------------------------------------------------------

// all_q: n_actions x n_agents (one agent per column), ties -> lowest index.
JointAction joint_argmax(const Matrix& all_q);

}  // namespace marl
