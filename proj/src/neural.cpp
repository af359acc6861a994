#include "marl/neural.hpp"

#include <cmath>

namespace marl {

void register_param(ParameterSet& params, const std::string& name, int rows,
                    int cols, int fan_in, std::mt19937_64& rng) {
  if (params.count(name)) throw Error("register_param: duplicate name " + name);
  if (rows <= 0 || cols <= 0 || fan_in <= 0)
    throw ShapeError("register_param: bad shape for " + name);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> uni(-bound, bound);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uni(rng);
  params.emplace(name, std::move(m));
}

void register_linear(ParameterSet& params, const std::string& prefix, int out,
                     int in, std::mt19937_64& rng) {
  register_param(params, prefix + ".W", out, in, in, rng);
  register_param(params, prefix + ".b", out, 1, in, rng);
}

void register_gru(ParameterSet& params, const std::string& prefix, int hidden,
                  int in, std::mt19937_64& rng) {
  for (const char* gate : {"z", "r", "c"}) {
    register_param(params, prefix + ".W" + gate, hidden, in, in, rng);
    register_param(params, prefix + ".U" + gate, hidden, hidden, hidden, rng);
    register_param(params, prefix + ".b" + gate, hidden, 1, hidden, rng);
  }
}

GradBuffer zeros_like(const ParameterSet& params) {
  GradBuffer g;
  for (const auto& [name, m] : params)
    g.emplace(name, Matrix::Zero(m.rows(), m.cols()));
  return g;
}

void check_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericsError(what + ": non-finite values");
}

void check_finite(const ParameterSet& params, const std::string& what) {
  for (const auto& [name, m] : params) check_finite(m, what + "/" + name);
}

ParameterSet sync_target(const ParameterSet& params) { return params; }

std::uint64_t hash_params(const ParameterSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, m] : params) {
    mix(name.data(), name.size());
    mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  return h;
}

Matrix linear_forward(const Matrix& W, const Matrix& b, const Matrix& X) {
  if (W.cols() != X.rows() || b.rows() != W.rows())
    throw ShapeError("linear_forward: shape mismatch");
  return (W * X).colwise() + b.col(0);
}

Matrix linear_backward(const Matrix& W, const Matrix& X, const Matrix& dY,
                       Matrix& dW, Matrix& db) {
  dW.noalias() += dY * X.transpose();
  db.col(0) += dY.rowwise().sum();
  return W.transpose() * dY;
}

Matrix relu(const Matrix& pre) { return pre.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& pre, const Matrix& dY) {
  return (pre.array() > 0.0).select(dY, Matrix::Zero(dY.rows(), dY.cols()));
}

Matrix elu(const Matrix& pre) {
  return (pre.array() > 0.0)
      .select(pre, pre.array().exp() - 1.0)
      .matrix();
}

Matrix elu_backward(const Matrix& pre, const Matrix& dY) {
  Matrix grad = (pre.array() > 0.0)
                    .select(Matrix::Ones(pre.rows(), pre.cols()),
                            pre.array().exp().matrix())
                    .matrix();
  return dY.cwiseProduct(grad);
}

namespace {

Matrix sigmoid(const Matrix& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

}  // namespace

Matrix gru_forward(const ParameterSet& params, const std::string& prefix,
                   const Matrix& X, const Matrix& H, GruCache& cache) {
  const Matrix& Wz = params.at(prefix + ".Wz");
  const Matrix& Uz = params.at(prefix + ".Uz");
  const Matrix& bz = params.at(prefix + ".bz");
  const Matrix& Wr = params.at(prefix + ".Wr");
  const Matrix& Ur = params.at(prefix + ".Ur");
  const Matrix& br = params.at(prefix + ".br");
  const Matrix& Wc = params.at(prefix + ".Wc");
  const Matrix& Uc = params.at(prefix + ".Uc");
  const Matrix& bc = params.at(prefix + ".bc");

  cache.x = X;
  cache.h_in = H;
  cache.z = sigmoid(((Wz * X + Uz * H).colwise() + bz.col(0)));
  cache.r = sigmoid(((Wr * X + Ur * H).colwise() + br.col(0)));
  cache.rh = cache.r.cwiseProduct(H);
  cache.c = ((Wc * X + Uc * cache.rh).colwise() + bc.col(0)).array().tanh();
  return (1.0 - cache.z.array()).matrix().cwiseProduct(H) +
         cache.z.cwiseProduct(cache.c);
}

Matrix gru_backward(const ParameterSet& params, const std::string& prefix,
                    const GruCache& cache, const Matrix& dH_out, GradBuffer& g,
                    Matrix& dh_in) {
  const Matrix& Wz = params.at(prefix + ".Wz");
  const Matrix& Uz = params.at(prefix + ".Uz");
  const Matrix& Wr = params.at(prefix + ".Wr");
  const Matrix& Ur = params.at(prefix + ".Ur");
  const Matrix& Wc = params.at(prefix + ".Wc");
  const Matrix& Uc = params.at(prefix + ".Uc");

  const Matrix dz = dH_out.cwiseProduct(cache.c - cache.h_in);
  const Matrix dc = dH_out.cwiseProduct(cache.z);
  dh_in += dH_out.cwiseProduct((1.0 - cache.z.array()).matrix());

  const Matrix dac =
      dc.cwiseProduct((1.0 - cache.c.array().square()).matrix());
  g.at(prefix + ".Wc").noalias() += dac * cache.x.transpose();
  g.at(prefix + ".Uc").noalias() += dac * cache.rh.transpose();
  g.at(prefix + ".bc").col(0) += dac.rowwise().sum();
  const Matrix drh = Uc.transpose() * dac;
  const Matrix dr = drh.cwiseProduct(cache.h_in);
  dh_in += drh.cwiseProduct(cache.r);

  const Matrix daz = dz.cwiseProduct(
      cache.z.cwiseProduct((1.0 - cache.z.array()).matrix()));
  g.at(prefix + ".Wz").noalias() += daz * cache.x.transpose();
  g.at(prefix + ".Uz").noalias() += daz * cache.h_in.transpose();
  g.at(prefix + ".bz").col(0) += daz.rowwise().sum();
  dh_in.noalias() += Uz.transpose() * daz;

  const Matrix dar = dr.cwiseProduct(
      cache.r.cwiseProduct((1.0 - cache.r.array()).matrix()));
  g.at(prefix + ".Wr").noalias() += dar * cache.x.transpose();
  g.at(prefix + ".Ur").noalias() += dar * cache.h_in.transpose();
  g.at(prefix + ".br").col(0) += dar.rowwise().sum();
  dh_in.noalias() += Ur.transpose() * dar;

  return Wz.transpose() * daz + Wr.transpose() * dar + Wc.transpose() * dac;
}

ParameterSet make_agent_params(const AgentNetConfig& cfg, std::mt19937_64& rng) {
  ParameterSet p;
  register_linear(p, "agent.fc1", cfg.hidden, cfg.input_dim, rng);
  register_linear(p, "agent.fc2", cfg.hidden, cfg.hidden, rng);
  if (cfg.recurrent) register_gru(p, "agent.gru", cfg.hidden, cfg.hidden, rng);
  register_linear(p, "agent.head", cfg.n_actions, cfg.hidden, rng);
  return p;
}

Matrix agent_forward(const ParameterSet& params, const AgentNetConfig& cfg,
                     const Matrix& X, Matrix& H, AgentStepCache& cache) {
  cache.x = X;
  cache.pre1 = linear_forward(params.at("agent.fc1.W"), params.at("agent.fc1.b"), X);
  cache.h1 = relu(cache.pre1);
  cache.pre2 =
      linear_forward(params.at("agent.fc2.W"), params.at("agent.fc2.b"), cache.h1);
  cache.h2 = relu(cache.pre2);
  if (cfg.recurrent) {
    if (H.size() == 0) H = Matrix::Zero(cfg.hidden, X.cols());
    cache.feat = gru_forward(params, "agent.gru", cache.h2, H, cache.gru);
    H = cache.feat;
  } else {
    cache.feat = cache.h2;
  }
  return linear_forward(params.at("agent.head.W"), params.at("agent.head.b"),
                        cache.feat);
}

Matrix agent_backward(const ParameterSet& params, const AgentNetConfig& cfg,
                      const AgentStepCache& cache, const Matrix& dAllQ,
                      const Matrix& dH_out, GradBuffer& g) {
  Matrix dfeat = linear_backward(params.at("agent.head.W"), cache.feat, dAllQ,
                                 g.at("agent.head.W"), g.at("agent.head.b"));
  if (dH_out.size() != 0) dfeat += dH_out;

  Matrix dh2;
  Matrix dh_in = Matrix::Zero(dfeat.rows(), dfeat.cols());
  if (cfg.recurrent) {
    dh2 = gru_backward(params, "agent.gru", cache.gru, dfeat, g, dh_in);
  } else {
    dh2 = dfeat;
  }

  Matrix dpre2 = relu_backward(cache.pre2, dh2);
  Matrix dh1 = linear_backward(params.at("agent.fc2.W"), cache.h1, dpre2,
                               g.at("agent.fc2.W"), g.at("agent.fc2.b"));
  Matrix dpre1 = relu_backward(cache.pre1, dh1);
  linear_backward(params.at("agent.fc1.W"), cache.x, dpre1, g.at("agent.fc1.W"),
                  g.at("agent.fc1.b"));
  return dh_in;
}

ParameterSet make_mlp_params(const std::string& prefix, int in, int hidden,
                             int out, std::mt19937_64& rng) {
  ParameterSet p;
  register_linear(p, prefix + ".fc1", hidden, in, rng);
  register_linear(p, prefix + ".fc2", hidden, hidden, rng);
  register_linear(p, prefix + ".head", out, hidden, rng);
  return p;
}

Matrix mlp_forward(const ParameterSet& params, const std::string& prefix,
                   const Matrix& X, MlpCache& cache) {
  cache.x = X;
  cache.pre1 = linear_forward(params.at(prefix + ".fc1.W"),
                              params.at(prefix + ".fc1.b"), X);
  cache.h1 = relu(cache.pre1);
  cache.pre2 = linear_forward(params.at(prefix + ".fc2.W"),
                              params.at(prefix + ".fc2.b"), cache.h1);
  cache.h2 = relu(cache.pre2);
  return linear_forward(params.at(prefix + ".head.W"),
                        params.at(prefix + ".head.b"), cache.h2);
}

Matrix mlp_backward(const ParameterSet& params, const std::string& prefix,
                    const MlpCache& cache, const Matrix& dY, GradBuffer& g) {
  Matrix dh2 = linear_backward(params.at(prefix + ".head.W"), cache.h2, dY,
                               g.at(prefix + ".head.W"), g.at(prefix + ".head.b"));
  Matrix dpre2 = relu_backward(cache.pre2, dh2);
  Matrix dh1 = linear_backward(params.at(prefix + ".fc2.W"), cache.h1, dpre2,
                               g.at(prefix + ".fc2.W"), g.at(prefix + ".fc2.b"));
  Matrix dpre1 = relu_backward(cache.pre1, dh1);
  return linear_backward(params.at(prefix + ".fc1.W"), cache.x, dpre1,
                         g.at(prefix + ".fc1.W"), g.at(prefix + ".fc1.b"));
}

RmsProp::RmsProp(double lr, double decay, double eps)
    : lr_(lr), decay_(decay), eps_(eps) {
  if (lr_ <= 0.0 || decay_ < 0.0 || decay_ >= 1.0 || eps_ <= 0.0)
    throw ConfigError("rmsprop: bad hyperparameters");
}

void RmsProp::step(ParameterSet& params, const GradBuffer& grads) {
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw Error("rmsprop: missing gradient for " + name);
    const Matrix& grad = git->second;
    if (grad.rows() != p.rows() || grad.cols() != p.cols())
      throw ShapeError("rmsprop: gradient shape mismatch for " + name);
    check_finite(grad, "rmsprop gradient " + name);
    auto vit = v_.find(name);
    if (vit == v_.end())
      vit = v_.emplace(name, Matrix::Zero(p.rows(), p.cols())).first;
    Matrix& v = vit->second;
    v = decay_ * v + (1.0 - decay_) * grad.cwiseProduct(grad);
    p.array() -= lr_ * grad.array() / (v.array() + eps_).sqrt();
  }
}

GradCheckReport grad_check(const std::function<double(const ParameterSet&)>& loss,
                           const ParameterSet& at, const GradBuffer& analytic,
                           double fd_step) {
  GradCheckReport report;
  ParameterSet probe = at;
  for (const auto& [name, grad] : analytic) {
    Matrix& tensor = probe.at(name);
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double saved = tensor.data()[i];
      tensor.data()[i] = saved + fd_step;
      const double up = loss(probe);
      tensor.data()[i] = saved - fd_step;
      const double down = loss(probe);
      tensor.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double a = grad.data()[i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

void colwise_max(const Matrix& q, std::vector<int>* argmax, Vector* maxval) {
  if (argmax) argmax->resize(q.cols());
  if (maxval) maxval->resize(q.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    int best = 0;
    double best_v = q(0, c);
    for (Eigen::Index r = 1; r < q.rows(); ++r) {
      if (q(r, c) > best_v) {
        best_v = q(r, c);
        best = static_cast<int>(r);
      }
    }
    if (argmax) (*argmax)[static_cast<std::size_t>(c)] = best;
    if (maxval) (*maxval)(c) = best_v;
  }
}

}  // namespace marl
