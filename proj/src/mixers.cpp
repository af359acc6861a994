#include "marl/mixers.hpp"

namespace marl {
namespace {

Matrix sign_of(const Matrix& m) {
  return m.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

Matrix vdn_mix(const Matrix& chosen_q) {
  return chosen_q.colwise().sum();
}

Matrix vdn_backward(const Matrix& dQtot, int n_agents) {
  return dQtot.replicate(n_agents, 1);
}

ParameterSet make_qmix_params(const QmixConfig& cfg, std::mt19937_64& rng) {
  if (cfg.n_agents <= 0 || cfg.state_dim <= 0 || cfg.embed <= 0)
    throw ShapeError("qmix: bad config");
  ParameterSet p;
  register_linear(p, "mix.hw1", cfg.embed * cfg.n_agents, cfg.state_dim, rng);
  register_linear(p, "mix.hb1", cfg.embed, cfg.state_dim, rng);
  register_linear(p, "mix.hw2", cfg.embed, cfg.state_dim, rng);
  register_linear(p, "mix.hv1", cfg.embed, cfg.state_dim, rng);
  register_linear(p, "mix.hv2", 1, cfg.embed, rng);
  return p;
}

Matrix qmix_mix(const ParameterSet& params, const QmixConfig& cfg,
                const Matrix& state, const Matrix& chosen_q, QmixCache& cache) {
  const int n = cfg.n_agents;
  const int e = cfg.embed;
  if (chosen_q.rows() != n || state.rows() != cfg.state_dim ||
      state.cols() != chosen_q.cols())
    throw ShapeError("qmix_mix: shape mismatch");

  cache.state = state;
  cache.q = chosen_q;
  cache.w1_pre =
      linear_forward(params.at("mix.hw1.W"), params.at("mix.hw1.b"), state);
  cache.b1 = linear_forward(params.at("mix.hb1.W"), params.at("mix.hb1.b"), state);
  cache.h_pre = cache.b1;
  for (int a = 0; a < n; ++a) {
    // rows a*e .. a*e+e of |w1_pre| hold the mixing column for agent a
    cache.h_pre += cache.w1_pre.middleRows(a * e, e).cwiseAbs().cwiseProduct(
        chosen_q.row(a).replicate(e, 1));
  }
  cache.h = elu(cache.h_pre);
  cache.w2_pre =
      linear_forward(params.at("mix.hw2.W"), params.at("mix.hw2.b"), state);
  cache.v_pre =
      linear_forward(params.at("mix.hv1.W"), params.at("mix.hv1.b"), state);
  cache.v_h = relu(cache.v_pre);
  cache.b2 = linear_forward(params.at("mix.hv2.W"), params.at("mix.hv2.b"),
                            cache.v_h);
  return cache.w2_pre.cwiseAbs().cwiseProduct(cache.h).colwise().sum() + cache.b2;
}

Matrix qmix_backward(const ParameterSet& params, const QmixConfig& cfg,
                     const QmixCache& cache, const Matrix& dQtot,
                     GradBuffer& g) {
  const int n = cfg.n_agents;
  const int e = cfg.embed;
  const Eigen::Index cols = dQtot.cols();

  // final bias head
  Matrix dv_h = linear_backward(params.at("mix.hv2.W"), cache.v_h, dQtot,
                                g.at("mix.hv2.W"), g.at("mix.hv2.b"));
  Matrix dv_pre = relu_backward(cache.v_pre, dv_h);
  linear_backward(params.at("mix.hv1.W"), cache.state, dv_pre,
                  g.at("mix.hv1.W"), g.at("mix.hv1.b"));

  // second mixing layer
  const Matrix dq_rep = dQtot.replicate(e, 1);
  Matrix dw2_abs = dq_rep.cwiseProduct(cache.h);
  Matrix dw2_pre = dw2_abs.cwiseProduct(sign_of(cache.w2_pre));
  linear_backward(params.at("mix.hw2.W"), cache.state, dw2_pre,
                  g.at("mix.hw2.W"), g.at("mix.hw2.b"));

  Matrix dh = dq_rep.cwiseProduct(cache.w2_pre.cwiseAbs());
  Matrix dh_pre = elu_backward(cache.h_pre, dh);

  // bias hypernetwork of the first layer
  linear_backward(params.at("mix.hb1.W"), cache.state, dh_pre,
                  g.at("mix.hb1.W"), g.at("mix.hb1.b"));

  // first mixing layer: utility gradients and weight-hypernet gradients
  Matrix dq(n, cols);
  Matrix dw1_pre(e * n, cols);
  for (int a = 0; a < n; ++a) {
    const auto w1_block = cache.w1_pre.middleRows(a * e, e);
    dq.row(a) = dh_pre.cwiseProduct(w1_block.cwiseAbs()).colwise().sum();
    dw1_pre.middleRows(a * e, e) =
        dh_pre.cwiseProduct(cache.q.row(a).replicate(e, 1))
            .cwiseProduct(sign_of(w1_block));
  }
  linear_backward(params.at("mix.hw1.W"), cache.state, dw1_pre,
                  g.at("mix.hw1.W"), g.at("mix.hw1.b"));
  return dq;
}

Matrix critic_input(const Matrix& state, const std::vector<JointAction>& actions,
                    int n_actions) {
  if (actions.empty()) throw ShapeError("critic_input: no actions");
  const int n_agents = static_cast<int>(actions.front().size());
  const Eigen::Index b = state.cols();
  if (static_cast<Eigen::Index>(actions.size()) != b)
    throw ShapeError("critic_input: state/action count mismatch");
  Matrix x = Matrix::Zero(state.rows() + n_agents * n_actions, b);
  x.topRows(state.rows()) = state;
  for (Eigen::Index c = 0; c < b; ++c) {
    const JointAction& u = actions[static_cast<std::size_t>(c)];
    for (int a = 0; a < n_agents; ++a) {
      if (u[a] < 0 || u[a] >= n_actions)
        throw InvalidActionError("critic_input: action out of range");
      x(state.rows() + a * n_actions + u[a], c) = 1.0;
    }
  }
  return x;
}

double wqmix_weight(double y, double qhat_at_ustar, const JointAction& u,
                    const JointAction& u_star, double alpha) {
  if (u == u_star || y > qhat_at_ustar) return 1.0;
  return alpha;
}

double wqmix_weight_em(double e, double qhat_at_ustar, const JointAction& u,
                       const JointAction& u_star, double alpha) {
  if (u == u_star || e > qhat_at_ustar) return 1.0;
  return alpha;
}

JointAction joint_argmax(const Matrix& all_q) {
  JointAction u(all_q.cols());
  std::vector<int> arg;
  colwise_max(all_q, &arg, nullptr);
  for (Eigen::Index a = 0; a < all_q.cols(); ++a) u[a] = arg[a];
  return u;
}

}  // namespace marl
