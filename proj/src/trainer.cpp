#include "marl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

namespace marl {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;     // parameter init
constexpr std::uint64_t kEnvStream = 0x656e7630;      // per-episode env seeds
constexpr std::uint64_t kExploreStream = 0x6578706c;  // epsilon-greedy draws
constexpr std::uint64_t kSampleStream = 0x73616d70;   // replay sampling
constexpr std::uint64_t kProjStream = 0x70726f6a;     // key projection
constexpr std::uint64_t kEvalStream = 0x6576616c;     // evaluation env seeds

const TrainerConfig& validated(const TrainerConfig& c) {
  c.validate();
  return c;
}

}  // namespace

const char* to_string(MixerKind kind) {
  switch (kind) {
    case MixerKind::vdn: return "vdn";
    case MixerKind::qmix: return "qmix";
    case MixerKind::wqmix: return "wqmix";
  }
  return "?";
}

const char* to_string(MemoryMode mode) {
  switch (mode) {
    case MemoryMode::none: return "none";
    case MemoryMode::sem: return "sem";
    case MemoryMode::saem: return "saem";
  }
  return "?";
}

void TrainerConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("lambda must lie in [0,1]");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("gamma must lie in [0,1)");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (buffer_capacity < batch_size)
    throw ConfigError("buffer_capacity must be at least batch_size");
  if (sync_period < 1) throw ConfigError("sync_period must be positive");
  if (total_steps < 0) throw ConfigError("total_steps must be non-negative");
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
  if (updates_per_episode < 1)
    throw ConfigError("updates_per_episode must be positive");
  if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0) ||
      !(epsilon.end >= 0.0 && epsilon.end <= 1.0) ||
      epsilon.start < epsilon.end)
    throw ConfigError("epsilon schedule must anneal within [0,1]");
  if (epsilon.anneal_steps < 1)
    throw ConfigError("epsilon anneal_steps must be positive");
  if (table_capacity == 0) throw ConfigError("table_capacity must be positive");
  if (m_capacity == 0) throw ConfigError("m_capacity must be positive");
  if (projection_dim < 1) throw ConfigError("projection_dim must be positive");
  if (!(key_resolution > 0.0))
    throw ConfigError("key_resolution must be positive");
  if (agent_hidden < 1 || mix_embed < 1 || critic_hidden < 1)
    throw ConfigError("network widths must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(rms_decay > 0.0 && rms_decay < 1.0))
    throw ConfigError("rms_decay must lie in (0,1)");
  if (!(rms_eps > 0.0)) throw ConfigError("rms_eps must be positive");
}

TrainState::TrainState(const TrainerConfig& c, const EnvConfig& e)
    : cfg(validated(c)),
      env_cfg(e),
      opt(c.lr, c.rms_decay, c.rms_eps),
      buffer(static_cast<std::size_t>(c.buffer_capacity)),
      mset(c.m_capacity),
      sem(c.table_capacity),
      saem(c.table_capacity) {
  env = make_env(env_cfg);
  env_spec = env->spec();

  agent_cfg.input_dim =
      env_spec.obs_dim + (cfg.append_agent_id ? env_spec.n_agents : 0);
  agent_cfg.n_actions = env_spec.n_actions;
  agent_cfg.hidden = cfg.agent_hidden;
  agent_cfg.recurrent = cfg.recurrent;
  mix_cfg.n_agents = env_spec.n_agents;
  mix_cfg.state_dim = env_spec.state_dim;
  mix_cfg.embed = cfg.mix_embed;

  // One parameter set, fixed registration order, one init stream: the same
  // seed always produces the same starting point.
  auto init_rng = seeded_rng(cfg.seed, kInitStream);
  params = make_agent_params(agent_cfg, init_rng);
  if (cfg.mixer != MixerKind::vdn) {
    ParameterSet mix = make_qmix_params(mix_cfg, init_rng);
    params.insert(mix.begin(), mix.end());
  }
  if (cfg.mixer == MixerKind::wqmix) {
    ParameterSet critic = make_mlp_params(
        "critic", env_spec.state_dim + env_spec.n_agents * env_spec.n_actions,
        cfg.critic_hidden, 1, init_rng);
    params.insert(critic.begin(), critic.end());
  }
  target = sync_target(params);

  if (cfg.memory != MemoryMode::none && cfg.use_projection) {
    auto proj_rng = seeded_rng(cfg.seed, kProjStream);
    projection =
        gaussian_projection(cfg.projection_dim, env_spec.state_dim, proj_rng);
  }

  env_rng = seeded_rng(cfg.seed, kEnvStream);
  explore_rng = seeded_rng(cfg.seed, kExploreStream);
  sample_rng = seeded_rng(cfg.seed, kSampleStream);
}

TrainState make_train_state(const TrainerConfig& cfg, const EnvConfig& env_cfg) {
  return TrainState(cfg, env_cfg);
}

Matrix build_agent_input(const Matrix& obs, int n_agents, bool append_agent_id) {
  if (!append_agent_id) return obs;
  Matrix x(obs.rows() + n_agents, obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(n_agents).setZero();
  for (Eigen::Index j = 0; j < obs.cols(); ++j)
    x(obs.rows() + (j % n_agents), j) = 1.0;
  return x;
}

Matrix agent_q_values(const ParameterSet& params, const AgentNetConfig& cfg,
                      const std::vector<Vector>& obs, bool append_agent_id,
                      Matrix& hidden) {
  if (obs.empty()) throw ShapeError("agent_q_values: no observations");
  const int n = static_cast<int>(obs.size());
  Matrix o(obs[0].size(), n);
  for (int a = 0; a < n; ++a) {
    if (obs[a].size() != o.rows())
      throw ShapeError("agent_q_values: ragged observations");
    o.col(a) = obs[a];
  }
  AgentStepCache cache;
  return agent_forward(params, cfg, build_agent_input(o, n, append_agent_id),
                       hidden, cache);
}

JointAction select_actions(const Matrix& all_q, double eps,
                           std::mt19937_64& rng) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw ConfigError("select_actions: epsilon must lie in [0,1]");
  const int n = static_cast<int>(all_q.cols());
  const int n_actions = static_cast<int>(all_q.rows());
  JointAction u(n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int a = 0; a < n; ++a) {
    // Always consume one roll per agent so the exploration stream stays
    // aligned across epsilon values.
    const double roll = u01(rng);
    if (roll < eps) {
      u[a] = draw_index(rng, n_actions);
    } else {
      int best = 0;
      double best_v = all_q(0, a);
      for (int r = 1; r < n_actions; ++r)
        if (all_q(r, a) > best_v) {
          best_v = all_q(r, a);
          best = r;
        }
      u[a] = best;
    }
  }
  return u;
}

namespace {

void flush_tables(TrainState& s) {
  const std::vector<MItem> items = s.mset.drain();
  if (s.cfg.memory == MemoryMode::saem) s.saem.flush(items);
  // The state-keyed table is the loss table in sem mode and a diagnostic
  // (target-comparison) table in saem mode; it absorbs every flush.
  s.sem.flush(items);
}

}  // namespace

Episode run_episode(TrainState& s) {
  Env& env = *s.env;
  Episode ep;
  ep.seed = s.env_rng();
  env.reset(ep.seed);

  const int n = s.env_spec.n_agents;
  Matrix hidden;
  for (;;) {
    Transition tr;
    tr.obs.resize(n);
    for (int a = 0; a < n; ++a) tr.obs[a] = env.observe(a);
    tr.state = env.state();
    Matrix all_q = agent_q_values(s.params, s.agent_cfg, tr.obs,
                                  s.cfg.append_agent_id, hidden);
    tr.action = select_actions(all_q, s.cfg.epsilon.at(s.step), s.explore_rng);
    const Env::StepResult res = env.step(tr.action);
    ++s.step;
    tr.reward = res.reward;
    tr.terminal = res.env_terminal;
    ep.steps.push_back(std::move(tr));
    if (res.episode_over) break;
  }
  ep.final_obs.resize(n);
  for (int a = 0; a < n; ++a) ep.final_obs[a] = env.observe(a);
  ep.final_state = env.state();
  ep.success = env.success();

  s.buffer.store(ep);

  if (s.cfg.memory != MemoryMode::none) {
    std::vector<double> rewards(ep.steps.size());
    for (std::size_t i = 0; i < ep.steps.size(); ++i)
      rewards[i] = ep.steps[i].reward;
    const std::vector<double> returns = discounted_returns(rewards, s.cfg.gamma);
    const Matrix* proj = s.projection.size() > 0 ? &s.projection : nullptr;
    // Stage (key, return) pairs in reverse time order; merge the moment the
    // staging set fills, even mid-episode.
    for (int t = ep.length() - 1; t >= 0; --t) {
      MItem item;
      item.key = make_key(ep.steps[t].state, proj, s.cfg.key_resolution);
      if (s.cfg.memory == MemoryMode::saem) item.action = ep.steps[t].action;
      item.ret = returns[static_cast<std::size_t>(t)];
      if (s.mset.push(std::move(item))) flush_tables(s);
    }
  }
  return ep;
}

Targets compute_targets(TrainState& s, const Batch& batch) {
  const int B = batch.batch;
  const int n = batch.n_agents;
  const int T = batch.t_max;
  const MixerKind mixer = s.cfg.mixer;
  const MemoryMode memory = s.cfg.memory;
  const double gamma = s.cfg.gamma;
  const Matrix* proj = s.projection.size() > 0 ? &s.projection : nullptr;

  // Greedy data of the frozen networks, one slot at a time. Per-agent argmax
  // realises the joint argmax for every mixer in play (monotonicity).
  std::vector<Matrix> maxq(T + 1);
  std::vector<std::vector<JointAction>> ustar(T + 1);
  {
    Matrix h;
    AgentStepCache scratch;
    std::vector<int> argmax;
    Vector maxval;
    for (int t = 0; t <= T; ++t) {
      Matrix x = build_agent_input(batch.obs[t], n, s.cfg.append_agent_id);
      const Matrix q = agent_forward(s.target, s.agent_cfg, x, h, scratch);
      colwise_max(q, &argmax, &maxval);
      maxq[t] = Matrix(n, B);
      ustar[t].assign(B, JointAction(n));
      for (int b = 0; b < B; ++b)
        for (int a = 0; a < n; ++a) {
          maxq[t](a, b) = maxval(b * n + a);
          ustar[t][b][a] = argmax[static_cast<std::size_t>(b) * n + a];
        }
    }
  }

  // max_u Q_tot under the frozen parameters: the vanilla bootstrap for
  // vdn/qmix and the lookup-miss fallback for every mixer.
  std::vector<Matrix> boot(T + 1);
  {
    QmixCache qc;
    for (int t = 0; t <= T; ++t)
      boot[t] = mixer == MixerKind::vdn
                    ? vdn_mix(maxq[t])
                    : qmix_mix(s.target, s.mix_cfg, batch.state[t], maxq[t], qc);
  }

  // Frozen central critic at the greedy joint action (weighted mixer only):
  // bootstrap for y and the reference point of the weighting rule.
  std::vector<Matrix> qhat_star(T + 1);
  if (mixer == MixerKind::wqmix) {
    MlpCache mc;
    for (int t = 0; t <= T; ++t)
      qhat_star[t] = mlp_forward(
          s.target, "critic",
          critic_input(batch.state[t], ustar[t], s.agent_cfg.n_actions), mc);
  }

  Targets out;
  out.y = Matrix::Zero(B, T);
  out.e = Matrix::Zero(B, T);
  if (memory == MemoryMode::saem) out.e_diag = Matrix::Zero(B, T);
  if (mixer == MixerKind::wqmix) {
    out.w = Matrix::Ones(B, T);
    out.w_e = Matrix::Ones(B, T);
  }

  for (int t = 0; t < T; ++t) {
    for (int b = 0; b < B; ++b) {
      if (batch.mask(b, t) == 0.0) continue;
      const double r = batch.reward(b, t);
      const bool term = batch.terminal(b, t) != 0.0;
      const double next_boot = mixer == MixerKind::wqmix
                                   ? qhat_star[t + 1](0, b)
                                   : boot[t + 1](0, b);
      const double y = term ? r : r + gamma * next_boot;
      out.y(b, t) = y;
      out.sum_y += y;
      ++out.masked_steps;

      double e = 0.0;
      if (memory != MemoryMode::none) {
        // State-keyed target: loss target in sem mode, logged diagnostic in
        // saem mode. Terminal steps have nothing to bootstrap from, so the
        // table is not consulted and the target is the reward itself.
        double e_s;
        if (term) {
          e_s = r;
        } else {
          const Vector next_state = batch.state[t + 1].col(b);
          const auto hit =
              s.sem.lookup(make_key(next_state, proj, s.cfg.key_resolution));
          e_s = hit ? r + gamma * *hit : r + gamma * boot[t + 1](0, b);
          if (hit && memory == MemoryMode::sem)
            out.max_hit_e = std::max(out.max_hit_e, e_s);
        }
        if (memory == MemoryMode::sem) {
          e = e_s;
        } else {
          out.e_diag(b, t) = e_s;
          out.sum_e_diag += e_s;
          const Vector cur_state = batch.state[t].col(b);
          const auto hit =
              s.saem.lookup(make_key(cur_state, proj, s.cfg.key_resolution),
                            batch.actions[t][b]);
          e = hit ? *hit : y;  // a miss falls back to the vanilla target
          if (hit) out.max_hit_e = std::max(out.max_hit_e, e);
        }
        out.e(b, t) = e;
        out.sum_e += e;
      }

      if (mixer == MixerKind::wqmix) {
        const double qh = qhat_star[t](0, b);
        out.w(b, t) =
            wqmix_weight(y, qh, batch.actions[t][b], ustar[t][b], s.cfg.alpha);
        out.w_e(b, t) =
            memory == MemoryMode::none
                ? out.w(b, t)
                : wqmix_weight_em(e, qh, batch.actions[t][b], ustar[t][b],
                                  s.cfg.alpha);
      }
    }
  }
  return out;
}

LossResult loss_and_grads(const ParameterSet& params, const TrainerConfig& cfg,
                          const AgentNetConfig& agent_cfg,
                          const QmixConfig& mix_cfg, const Batch& batch,
                          const Targets& tg) {
  const int B = batch.batch;
  const int n = batch.n_agents;
  const int T = batch.t_max;
  const int n_actions = agent_cfg.n_actions;
  const double lambda = cfg.effective_lambda();
  const MixerKind mixer = cfg.mixer;

  // Live forward pass over the real step range.
  std::vector<AgentStepCache> acache(T);
  std::vector<QmixCache> qcache(mixer != MixerKind::vdn ? T : 0);
  std::vector<MlpCache> ccache(mixer == MixerKind::wqmix ? T : 0);
  std::vector<Matrix> chosen(T), qtot(T), qhat(mixer == MixerKind::wqmix ? T : 0);
  {
    Matrix h;
    for (int t = 0; t < T; ++t) {
      Matrix x = build_agent_input(batch.obs[t], n, cfg.append_agent_id);
      const Matrix all_q = agent_forward(params, agent_cfg, x, h, acache[t]);
      chosen[t] = Matrix(n, B);
      for (int b = 0; b < B; ++b)
        for (int a = 0; a < n; ++a)
          chosen[t](a, b) = all_q(batch.actions[t][b][a], b * n + a);
      qtot[t] = mixer == MixerKind::vdn
                    ? vdn_mix(chosen[t])
                    : qmix_mix(params, mix_cfg, batch.state[t], chosen[t],
                               qcache[t]);
      if (mixer == MixerKind::wqmix)
        qhat[t] = mlp_forward(
            params, "critic",
            critic_input(batch.state[t], batch.actions[t], n_actions),
            ccache[t]);
    }
  }

  // Masked sum of blended squared residuals, batch entry outer, step inner.
  // The blend d_y + lambda*(d_E - d_y) equals (1-lambda)d_y + lambda*d_E but
  // degenerates exactly onto the plain TD residual when lambda == 0 or the
  // two targets coincide bit-for-bit.
  double loss = 0.0;
  std::vector<Matrix> dqtot(T, Matrix::Zero(1, B));
  std::vector<Matrix> dqhat;
  if (mixer == MixerKind::wqmix) dqhat.assign(T, Matrix::Zero(1, B));
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      if (batch.mask(b, t) == 0.0) continue;
      const double q = qtot[t](0, b);
      const double dy = q - tg.y(b, t);
      const double de = q - tg.e(b, t);
      if (mixer != MixerKind::wqmix) {
        if (lambda == 0.0) {
          loss += dy * dy;
          dqtot[t](0, b) = 2.0 * dy;
        } else if (lambda == 1.0) {
          loss += de * de;
          dqtot[t](0, b) = 2.0 * de;
        } else {
          loss += dy * dy + lambda * (de * de - dy * dy);
          dqtot[t](0, b) = 2.0 * (dy + lambda * (de - dy));
        }
      } else {
        const double w = tg.w(b, t);
        const double we = tg.w_e(b, t);
        const double qh = qhat[t](0, b);
        const double hy = qh - tg.y(b, t);
        const double he = qh - tg.e(b, t);
        if (lambda == 0.0) {
          loss += w * dy * dy + hy * hy;
          dqtot[t](0, b) = 2.0 * (w * dy);
          dqhat[t](0, b) = 2.0 * hy;
        } else if (lambda == 1.0) {
          loss += we * de * de + he * he;
          dqtot[t](0, b) = 2.0 * (we * de);
          dqhat[t](0, b) = 2.0 * he;
        } else {
          loss += w * dy * dy + lambda * (we * de * de - w * dy * dy);
          loss += hy * hy + lambda * (he * he - hy * hy);
          dqtot[t](0, b) = 2.0 * (w * dy + lambda * (we * de - w * dy));
          dqhat[t](0, b) = 2.0 * (hy + lambda * (he - hy));
        }
      }
    }
  }
  if (!std::isfinite(loss)) throw NumericsError("training loss is not finite");

  LossResult out;
  out.loss = loss;
  out.grads = zeros_like(params);

  std::vector<Matrix> dchosen(T);
  for (int t = 0; t < T; ++t) {
    dchosen[t] = mixer == MixerKind::vdn
                     ? vdn_backward(dqtot[t], n)
                     : qmix_backward(params, mix_cfg, qcache[t], dqtot[t],
                                     out.grads);
    if (mixer == MixerKind::wqmix)
      mlp_backward(params, "critic", ccache[t], dqhat[t], out.grads);
  }

  // Scatter per-agent gradients onto the chosen actions and walk the steps
  // backwards so recurrent credit flows to earlier slices.
  Matrix dh;
  for (int t = T - 1; t >= 0; --t) {
    Matrix dallq = Matrix::Zero(n_actions, static_cast<Eigen::Index>(B) * n);
    for (int b = 0; b < B; ++b)
      for (int a = 0; a < n; ++a)
        dallq(batch.actions[t][b][a], b * n + a) = dchosen[t](a, b);
    dh = agent_backward(params, agent_cfg, acache[t], dallq, dh, out.grads);
  }
  return out;
}

LossResult loss_and_grads(const TrainState& s, const Batch& batch,
                          const Targets& targets) {
  return loss_and_grads(s.params, s.cfg, s.agent_cfg, s.mix_cfg, batch,
                        targets);
}

EvalResult evaluate(const TrainState& s, long long eval_round) {
  auto env = s.env->fresh();
  const std::uint64_t base = splitmix64(s.cfg.seed ^ kEvalStream);
  const int n = s.env_spec.n_agents;
  double sum_return = 0.0;
  int successes = 0;
  std::vector<int> argmax;
  for (int i = 0; i < s.cfg.eval_episodes; ++i) {
    const std::uint64_t idx =
        static_cast<std::uint64_t>(eval_round) *
            static_cast<std::uint64_t>(s.cfg.eval_episodes) +
        static_cast<std::uint64_t>(i) + 1;
    env->reset(splitmix64(base + 0x9e3779b97f4a7c15ULL * idx));
    Matrix hidden;
    std::vector<Vector> obs(n);
    double ret = 0.0, disc = 1.0;
    for (;;) {
      for (int a = 0; a < n; ++a) obs[a] = env->observe(a);
      const Matrix all_q = agent_q_values(s.params, s.agent_cfg, obs,
                                          s.cfg.append_agent_id, hidden);
      colwise_max(all_q, &argmax, nullptr);
      const Env::StepResult res = env->step(JointAction(argmax.begin(), argmax.end()));
      ret += disc * res.reward;
      disc *= s.cfg.gamma;
      if (res.episode_over) break;
    }
    sum_return += ret;
    if (env->success()) ++successes;
  }
  return {sum_return / s.cfg.eval_episodes,
          static_cast<double>(successes) / s.cfg.eval_episodes};
}

std::vector<MetricsRecord> train(const TrainerConfig& cfg,
                                 const EnvConfig& env_cfg,
                                 const TrainHooks& hooks) {
  TrainState s(cfg, env_cfg);
  std::vector<MetricsRecord> records;
  auto window_start = std::chrono::steady_clock::now();

  const auto emit = [&](long long eval_round) {
    MetricsRecord r;
    r.step = s.step;
    r.episode = s.episode;
    if (s.win_updates > 0) r.loss = s.win_loss / static_cast<double>(s.win_updates);
    if (s.win_target_steps > 0) {
      r.mean_y = s.win_y / static_cast<double>(s.win_target_steps);
      r.mean_E_s = s.win_e_s / static_cast<double>(s.win_target_steps);
      r.mean_E_su = s.win_e_su / static_cast<double>(s.win_target_steps);
    }
    const EvalResult ev = evaluate(s, eval_round);
    r.eval_return_mean = ev.mean_return;
    r.eval_success_rate = ev.success_rate;
    const bool sa = s.cfg.memory == MemoryMode::saem;
    r.table_size = sa ? s.saem.total_entries() : s.sem.size();
    const std::uint64_t hits = sa ? s.saem.hits() : s.sem.hits();
    const std::uint64_t misses = sa ? s.saem.misses() : s.sem.misses();
    r.table_hits = hits - s.win_hits_base;
    r.table_misses = misses - s.win_misses_base;
    r.hit_rate = (r.table_hits + r.table_misses) > 0
                     ? static_cast<double>(r.table_hits) /
                           static_cast<double>(r.table_hits + r.table_misses)
                     : 0.0;
    r.max_hit_E = s.win_max_hit_e;
    r.updates = s.win_updates;
    const auto now = std::chrono::steady_clock::now();
    r.wall_ms = std::chrono::duration<double, std::milli>(now - window_start).count();
    window_start = now;

    s.win_loss = s.win_y = s.win_e_s = s.win_e_su = 0.0;
    s.win_updates = s.win_target_steps = 0;
    s.win_max_hit_e = -std::numeric_limits<double>::infinity();
    s.win_hits_base = hits;
    s.win_misses_base = misses;
    records.push_back(r);
  };

  emit(0);  // pre-training snapshot
  long long eval_round = 1;
  long long next_eval = cfg.eval_interval;

  while (s.step < cfg.total_steps) {
    run_episode(s);
    for (int k = 0; k < cfg.updates_per_episode; ++k) {
      const auto sampled =
          s.buffer.sample(static_cast<std::size_t>(cfg.batch_size), s.sample_rng);
      if (!sampled) break;  // replay not warm yet
      const Batch batch = pad_batch(*sampled);
      const Targets tg = compute_targets(s, batch);
      const LossResult res = loss_and_grads(s, batch, tg);
      s.opt.step(s.params, res.grads);

      s.win_loss += res.loss;
      ++s.win_updates;
      s.win_y += tg.sum_y;
      if (s.cfg.memory == MemoryMode::sem) {
        s.win_e_s += tg.sum_e;
      } else if (s.cfg.memory == MemoryMode::saem) {
        s.win_e_su += tg.sum_e;
        s.win_e_s += tg.sum_e_diag;
      }
      s.win_target_steps += tg.masked_steps;
      s.win_max_hit_e = std::max(s.win_max_hit_e, tg.max_hit_e);
      if (hooks.after_update) hooks.after_update(s);
    }
    ++s.episode;
    if (s.episode % cfg.sync_period == 0) s.target = sync_target(s.params);
    if (hooks.after_episode) hooks.after_episode(s);
    if (s.step >= next_eval) {
      emit(eval_round++);
      next_eval = (s.step / cfg.eval_interval + 1) * cfg.eval_interval;
    }
  }
  if (!records.empty() && records.back().step != s.step) emit(eval_round++);
  return records;
}

}  // namespace marl
