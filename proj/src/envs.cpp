#include "marl/envs.hpp"

#include "grid.hpp"

#include <algorithm>
#include <cmath>

namespace marl {
namespace {

void require_action_range(const JointAction& u, int n_agents, int n_actions) {
  if (static_cast<int>(u.size()) != n_agents)
    throw InvalidActionError("step: wrong joint-action arity");
  for (int a : u)
    if (a < 0 || a >= n_actions)
      throw InvalidActionError("step: action index out of range");
}

}  // namespace

double MatrixGameConfig::payoff_at(const JointAction& u) const {
  std::size_t idx = 0;
  for (int a = 0; a < n_agents; ++a)
    idx = idx * static_cast<std::size_t>(n_actions) + static_cast<std::size_t>(u[a]);
  return payoff.at(idx);
}

void MatrixGameConfig::validate() const {
  if (n_agents < 2) throw ConfigError("matrix game: need at least 2 agents");
  if (n_actions < 1) throw ConfigError("matrix game: need at least 1 action");
  std::size_t expect = 1;
  for (int a = 0; a < n_agents; ++a) expect *= static_cast<std::size_t>(n_actions);
  if (payoff.size() != expect)
    throw ConfigError("matrix game: payoff tensor has wrong size");
}

MatrixGameConfig climbing_game() {
  MatrixGameConfig cfg;
  cfg.n_agents = 2;
  cfg.n_actions = 3;
  cfg.payoff = {11, -30, 0, -30, 7, 6, 0, 0, 5};
  return cfg;
}

void LeverConfig::validate() const {
  if (n_agents < 2) throw ConfigError("lever game: need at least 2 agents");
  if (n_levers < 1) throw ConfigError("lever game: need at least 1 lever");
  if (episode_limit < 1) throw ConfigError("lever game: episode limit must be positive");
  if (cue_noise < 0.0 || cue_noise > 1.0)
    throw ConfigError("lever game: cue_noise must lie in [0,1]");
}

void PredatorPreyConfig::validate() const {
  if (width < 2 || height < 2) throw ConfigError("predator-prey: grid too small");
  if (n_predators < 2) throw ConfigError("predator-prey: need at least 2 predators");
  if (sight_radius < 0) throw ConfigError("predator-prey: negative sight radius");
  if (episode_limit < 1)
    throw ConfigError("predator-prey: episode limit must be positive");
}

// ---------------------------------------------------------------------------

namespace {

class MatrixGameEnv final : public Env {
 public:
  explicit MatrixGameEnv(MatrixGameConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    spec_ = {"matrix_game", cfg_.n_agents, cfg_.n_actions, 1, 1, 1};
    best_payoff_ = *std::max_element(cfg_.payoff.begin(), cfg_.payoff.end());
  }

  const EnvSpec& spec() const override { return spec_; }

  void reset(std::uint64_t) override {
    started_ = true;
    over_ = false;
    success_ = false;
  }

  Vector state() const override { return Vector::Zero(1); }
  Vector observe(int) const override { return Vector::Zero(1); }

  StepResult step(const JointAction& u) override {
    if (!started_) throw Error("step before reset");
    if (over_) throw EpisodeOverError("matrix game: episode is over");
    require_action_range(u, cfg_.n_agents, cfg_.n_actions);
    const double r = cfg_.payoff_at(u);
    over_ = true;
    success_ = (r == best_payoff_);
    return {r, true, true};
  }

  bool success() const override { return success_; }
  std::unique_ptr<Env> fresh() const override {
    return std::make_unique<MatrixGameEnv>(cfg_);
  }

 private:
  MatrixGameConfig cfg_;
  EnvSpec spec_;
  double best_payoff_ = 0.0;
  bool started_ = false;
  bool over_ = false;
  bool success_ = false;
};

class LeverEnv final : public Env {
 public:
  explicit LeverEnv(LeverConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    spec_ = {"lever_coordination", cfg_.n_agents, cfg_.n_levers,
             cfg_.n_agents + cfg_.n_levers, cfg_.n_levers + 1,
             cfg_.episode_limit};
  }

  const EnvSpec& spec() const override { return spec_; }

  void reset(std::uint64_t seed) override {
    auto rng = seeded_rng(seed, 0x6c657665ULL);
    correct_ = draw_index(rng, cfg_.n_levers);
    cues_.resize(cfg_.n_agents);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int a = 0; a < cfg_.n_agents; ++a) {
      // each agent independently sees the true lever or a random one
      cues_[a] = (u01(rng) < cfg_.cue_noise) ? draw_index(rng, cfg_.n_levers)
                                             : correct_;
    }
    t_ = 0;
    started_ = true;
    over_ = false;
    success_ = false;
  }

  Vector state() const override {
    Vector s = Vector::Zero(cfg_.n_levers + 1);
    s(correct_) = 1.0;
    s(cfg_.n_levers) =
        static_cast<double>(t_) / static_cast<double>(cfg_.episode_limit);
    return s;
  }

  Vector observe(int agent) const override {
    Vector o = Vector::Zero(cfg_.n_agents + cfg_.n_levers);
    o(agent) = 1.0;
    o(cfg_.n_agents + cues_[agent]) = 1.0;
    return o;
  }

  StepResult step(const JointAction& u) override {
    if (!started_) throw Error("step before reset");
    if (over_) throw EpisodeOverError("lever game: episode is over");
    require_action_range(u, cfg_.n_agents, cfg_.n_levers);
    ++t_;
    const bool coordinated =
        std::all_of(u.begin(), u.end(), [&](int a) { return a == correct_; });
    if (coordinated) {
      over_ = true;
      success_ = true;
      return {1.0, true, true};
    }
    if (t_ >= cfg_.episode_limit) {
      over_ = true;
      return {0.0, true, false};
    }
    return {0.0, false, false};
  }

  bool success() const override { return success_; }
  std::unique_ptr<Env> fresh() const override {
    return std::make_unique<LeverEnv>(cfg_);
  }

 private:
  LeverConfig cfg_;
  EnvSpec spec_;
  int correct_ = 0;
  std::vector<int> cues_;
  int t_ = 0;
  bool started_ = false;
  bool over_ = false;
  bool success_ = false;
};

}  // namespace

namespace {

class PredatorPreyEnv final : public Env {
 public:
  explicit PredatorPreyEnv(PredatorPreyConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int obs_dim = 2 + 3 + 3 * (cfg_.n_predators - 1);
    spec_ = {"predator_prey_grid", cfg_.n_predators, 5,        obs_dim,
             2 * (cfg_.n_predators + 1),              cfg_.episode_limit};
  }

  const EnvSpec& spec() const override { return spec_; }

  void reset(std::uint64_t seed) override {
    auto place_rng = seeded_rng(seed, 0x706c6163ULL);
    // dedicated stream so the prey's walk is independent of placement
    prey_rng_ = seeded_rng(seed, 0x70726579ULL);
    const int cells = cfg_.width * cfg_.height;
    std::vector<int> taken;
    auto place_distinct = [&]() {
      for (;;) {
        int c = draw_index(place_rng, cells);
        if (std::find(taken.begin(), taken.end(), c) == taken.end()) {
          taken.push_back(c);
          return c;
        }
      }
    };
    preds_.resize(cfg_.n_predators);
    for (int& p : preds_) p = place_distinct();
    prey_ = place_distinct();
    t_ = 0;
    started_ = true;
    over_ = false;
    success_ = false;
  }

  Vector state() const override {
    const double s = static_cast<double>(std::max(cfg_.width, cfg_.height));
    Vector v(2 * (cfg_.n_predators + 1));
    int i = 0;
    for (int p : preds_) {
      v(i++) = (p % cfg_.width) / s;
      v(i++) = (p / cfg_.width) / s;
    }
    v(i++) = (prey_ % cfg_.width) / s;
    v(i++) = (prey_ / cfg_.width) / s;
    return v;
  }

  Vector observe(int agent) const override {
    const double s = static_cast<double>(std::max(cfg_.width, cfg_.height));
    Vector o = Vector::Zero(spec_.obs_dim);
    const int self = preds_[agent];
    o(0) = (self % cfg_.width) / s;
    o(1) = (self / cfg_.width) / s;
    int i = 2;
    auto put_relative = [&](int target) {
      const int dx = pp::torus_delta(self % cfg_.width, target % cfg_.width,
                                     cfg_.width);
      const int dy = pp::torus_delta(self / cfg_.width, target / cfg_.width,
                                     cfg_.height);
      if (std::max(std::abs(dx), std::abs(dy)) <= cfg_.sight_radius) {
        o(i++) = 1.0;
        o(i++) = dx / s;
        o(i++) = dy / s;
      } else {
        i += 3;  // leave zeros for entities outside the window
      }
    };
    put_relative(prey_);
    for (int a = 0; a < cfg_.n_predators; ++a)
      if (a != agent) put_relative(preds_[a]);
    return o;
  }

  StepResult step(const JointAction& u) override {
    if (!started_) throw Error("step before reset");
    if (over_) throw EpisodeOverError("predator-prey: episode is over");
    require_action_range(u, cfg_.n_predators, 5);
    ++t_;
    for (int a = 0; a < cfg_.n_predators; ++a)
      preds_[a] = pp::move_cell(preds_[a], u[a], cfg_.width, cfg_.height);
    const bool captured = std::all_of(preds_.begin(), preds_.end(),
                                      [&](int p) { return p == prey_; });
    double reward = cfg_.step_cost;
    if (captured) {
      reward += cfg_.capture_reward + pp::shaping_term(cfg_, preds_, prey_);
      over_ = true;
      success_ = true;
      return {reward, true, true};
    }
    prey_ = pp::move_cell(prey_, draw_index(prey_rng_, 5), cfg_.width,
                          cfg_.height);
    reward += pp::shaping_term(cfg_, preds_, prey_);
    if (t_ >= cfg_.episode_limit) {
      over_ = true;
      return {reward, true, false};
    }
    return {reward, false, false};
  }

  bool success() const override { return success_; }
  std::unique_ptr<Env> fresh() const override {
    return std::make_unique<PredatorPreyEnv>(cfg_);
  }

 private:
  PredatorPreyConfig cfg_;
  EnvSpec spec_;
  std::mt19937_64 prey_rng_;
  std::vector<int> preds_;
  int prey_ = 0;
  int t_ = 0;
  bool started_ = false;
  bool over_ = false;
  bool success_ = false;
};

}  // namespace

std::unique_ptr<Env> make_env(const EnvConfig& config) {
  return std::visit(
      [](const auto& cfg) -> std::unique_ptr<Env> {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, MatrixGameConfig>)
          return std::make_unique<MatrixGameEnv>(cfg);
        else if constexpr (std::is_same_v<T, LeverConfig>)
          return std::make_unique<LeverEnv>(cfg);
        else
          return std::make_unique<PredatorPreyEnv>(cfg);
      },
      config);
}

}  // namespace marl
