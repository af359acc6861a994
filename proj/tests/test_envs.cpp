#include "doctest.h"

#include "marl/core.hpp"
#include "marl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace marl;

namespace {

// independent torus arithmetic so the env and oracle are checked against a
// second implementation, not against themselves
int wrap_mod(int v, int m) { return ((v % m) + m) % m; }

int ring_delta(int from, int to, int m) {
  int d = wrap_mod(to - from, m);
  if (d > m / 2) d -= m;
  return d;
}

int ring_dist(int from, int to, int m) { return std::abs(ring_delta(from, to, m)); }

struct Cell {
  int x = 0;
  int y = 0;
};

// positions are exactly recoverable from the normalized global state
std::vector<Cell> decode_positions(const Vector& state, int w, int h) {
  const double s = static_cast<double>(std::max(w, h));
  std::vector<Cell> out;
  for (int i = 0; i + 1 < state.size(); i += 2)
    out.push_back({static_cast<int>(std::lround(state(i) * s)),
                   static_cast<int>(std::lround(state(i + 1) * s))});
  return out;
}

int manhattan(const Cell& a, const Cell& b, int w, int h) {
  return ring_dist(a.x, b.x, w) + ring_dist(a.y, b.y, h);
}

// move one axis toward the target; action code 0=stay 1=N 2=S 3=E 4=W
int chase_action(const Cell& self, const Cell& target, int w, int h) {
  const int dx = ring_delta(self.x, target.x, w);
  const int dy = ring_delta(self.y, target.y, h);
  if (dx > 0) return 3;
  if (dx < 0) return 4;
  if (dy > 0) return 2;
  if (dy < 0) return 1;
  return 0;
}

int correct_lever_of(const Env& env, int n_levers) {
  const Vector s = env.state();
  for (int i = 0; i < n_levers; ++i)
    if (s(i) == 1.0) return i;
  return -1;
}

}  // namespace

TEST_CASE("climbing payoff tensor and lookup") {
  const MatrixGameConfig cfg = climbing_game();
  CHECK(cfg.n_agents == 2);
  CHECK(cfg.n_actions == 3);
  REQUIRE(cfg.payoff.size() == 9);
  CHECK(cfg.payoff_at({0, 0}) == 11.0);
  CHECK(cfg.payoff_at({0, 1}) == -30.0);
  CHECK(cfg.payoff_at({1, 0}) == -30.0);
  CHECK(cfg.payoff_at({1, 1}) == 7.0);
  CHECK(cfg.payoff_at({1, 2}) == 6.0);
  CHECK(cfg.payoff_at({2, 2}) == 5.0);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("matrix game env: one-shot optimal step") {
  auto env = make_env(climbing_game());
  const EnvSpec& spec = env->spec();
  CHECK(spec.name == "matrix_game");
  CHECK(spec.n_agents == 2);
  CHECK(spec.n_actions == 3);
  CHECK(spec.obs_dim == 1);
  CHECK(spec.state_dim == 1);
  CHECK(spec.episode_limit == 1);

  env->reset(0);
  CHECK(env->state().size() == 1);
  CHECK(env->state()(0) == 0.0);
  CHECK(env->observe(0) == Vector::Zero(1));
  CHECK(env->observe(1) == Vector::Zero(1));
  CHECK_FALSE(env->success());

  const auto res = env->step({0, 0});
  CHECK(res.reward == 11.0);
  CHECK(res.episode_over);
  CHECK(res.env_terminal);
  CHECK(env->success());
}

TEST_CASE("matrix game env: miscoordination and episode-over guard") {
  auto env = make_env(climbing_game());
  env->reset(42);
  const auto res = env->step({0, 1});
  CHECK(res.reward == -30.0);
  CHECK(res.episode_over);
  CHECK(res.env_terminal);  // the one-shot game always truly terminates
  CHECK_FALSE(env->success());
  CHECK_THROWS_AS(env->step({0, 0}), EpisodeOverError);

  // reset clears the episode-over latch
  env->reset(43);
  CHECK(env->step({2, 2}).reward == 5.0);
}

TEST_CASE("matrix game env: action validation and reset guard") {
  auto env = make_env(climbing_game());
  CHECK_THROWS_AS(env->step({0, 0}), Error);  // step before reset
  env->reset(0);
  CHECK_THROWS_AS(env->step({0}), InvalidActionError);
  CHECK_THROWS_AS(env->step({0, 1, 2}), InvalidActionError);
  CHECK_THROWS_AS(env->step({3, 0}), InvalidActionError);
  CHECK_THROWS_AS(env->step({0, -1}), InvalidActionError);
}

TEST_CASE("matrix game config validation") {
  MatrixGameConfig cfg = climbing_game();
  cfg.payoff.pop_back();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = climbing_game();
  cfg.n_agents = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = climbing_game();
  cfg.n_actions = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("matrix game oracle: exhaustive argmax") {
  const auto climb = oracle_matrix(climbing_game());
  CHECK(climb.optimal_return == 11.0);
  REQUIRE(climb.best_joint.size() == 2);
  CHECK(climb.best_joint[0] == 0);
  CHECK(climb.best_joint[1] == 0);

  // row-major decode: index 2 of a 2x2 tensor is joint action (1,0)
  MatrixGameConfig two;
  two.n_agents = 2;
  two.n_actions = 2;
  two.payoff = {1.0, 2.0, 9.0, 4.0};
  const auto res = oracle_matrix(two);
  CHECK(res.optimal_return == 9.0);
  CHECK(res.best_joint == JointAction{1, 0});

  MatrixGameConfig three;
  three.n_agents = 3;
  three.n_actions = 2;
  three.payoff = {0, 0, 0, 0, 0, 8.5, 0, 0};  // index 5 = (1,0,1)
  const auto res3 = oracle_matrix(three);
  CHECK(res3.optimal_return == 8.5);
  CHECK(res3.best_joint == JointAction{1, 0, 1});
}

TEST_CASE("lever env: spec and noise-free cues") {
  LeverConfig cfg;
  cfg.cue_noise = 0.0;
  auto env = make_env(cfg);
  const EnvSpec& spec = env->spec();
  CHECK(spec.name == "lever_coordination");
  CHECK(spec.n_agents == 2);
  CHECK(spec.n_actions == 3);
  CHECK(spec.obs_dim == 5);   // one-hot agent id + one-hot cue
  CHECK(spec.state_dim == 4); // one-hot correct lever + time fraction
  CHECK(spec.episode_limit == 5);

  for (std::uint64_t seed : {0ULL, 7ULL, 123ULL}) {
    env->reset(seed);
    const int correct = correct_lever_of(*env, cfg.n_levers);
    REQUIRE(correct >= 0);
    CHECK(env->state()(cfg.n_levers) == 0.0);  // t/limit at reset
    for (int a = 0; a < cfg.n_agents; ++a) {
      const Vector o = env->observe(a);
      REQUIRE(o.size() == 5);
      CHECK(o(a) == 1.0);                     // own id
      CHECK(o(1 - a) == 0.0);
      CHECK(o(cfg.n_agents + correct) == 1.0);  // cue matches the truth
      CHECK(o.sum() == 2.0);
    }
  }
}

TEST_CASE("lever env: wrong pulls then coordinated pull") {
  LeverConfig cfg;
  cfg.cue_noise = 0.0;
  auto env = make_env(cfg);
  env->reset(11);
  const int correct = correct_lever_of(*env, cfg.n_levers);
  const int wrong = (correct + 1) % cfg.n_levers;

  auto res = env->step({wrong, wrong});
  CHECK(res.reward == 0.0);
  CHECK_FALSE(res.episode_over);
  CHECK_FALSE(res.env_terminal);
  CHECK(env->state()(cfg.n_levers) == doctest::Approx(1.0 / 5.0));

  // a half-coordinated pull earns nothing
  res = env->step({correct, wrong});
  CHECK(res.reward == 0.0);
  CHECK_FALSE(res.episode_over);

  res = env->step({correct, correct});
  CHECK(res.reward == 1.0);
  CHECK(res.episode_over);
  CHECK(res.env_terminal);
  CHECK(env->success());
  CHECK_THROWS_AS(env->step({correct, correct}), EpisodeOverError);
}

TEST_CASE("lever env: timeout is not env-terminal") {
  LeverConfig cfg;
  cfg.cue_noise = 0.0;
  cfg.episode_limit = 4;
  auto env = make_env(cfg);
  env->reset(3);
  const int wrong = (correct_lever_of(*env, cfg.n_levers) + 1) % cfg.n_levers;

  for (int t = 0; t < cfg.episode_limit - 1; ++t) {
    const auto res = env->step({wrong, wrong});
    CHECK_FALSE(res.episode_over);
  }
  const auto last = env->step({wrong, wrong});
  CHECK(last.reward == 0.0);
  CHECK(last.episode_over);
  CHECK_FALSE(last.env_terminal);  // time-limit cut, not a true terminal
  CHECK_FALSE(env->success());
  CHECK_THROWS_AS(env->step({wrong, wrong}), EpisodeOverError);
}

TEST_CASE("lever env: seed determinism and variation") {
  LeverConfig cfg;
  auto a = make_env(cfg);
  auto b = make_env(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    a->reset(seed);
    b->reset(seed);
    CHECK(a->state() == b->state());
    CHECK(a->observe(0) == b->observe(0));
    CHECK(a->observe(1) == b->observe(1));
  }

  std::set<int> levers;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    a->reset(seed);
    levers.insert(correct_lever_of(*a, cfg.n_levers));
  }
  CHECK(levers.size() == 3);  // every lever shows up across seeds
}

TEST_CASE("lever env: noisy cues can disagree with the correct lever") {
  LeverConfig cfg;
  cfg.cue_noise = 1.0;
  auto env = make_env(cfg);
  int disagreements = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    env->reset(seed);
    const int correct = correct_lever_of(*env, cfg.n_levers);
    for (int a = 0; a < cfg.n_agents; ++a) {
      const Vector o = env->observe(a);
      if (o(cfg.n_agents + correct) != 1.0) ++disagreements;
    }
  }
  // random cues hit the truth only 1/3 of the time
  CHECK(disagreements > 80);
}

TEST_CASE("lever config validation and oracle") {
  LeverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.cue_noise = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LeverConfig{};
  cfg.n_agents = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LeverConfig{};
  cfg.episode_limit = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // one unit of reward, achievable on the very first step
  CHECK(oracle_lever(LeverConfig{}, 0.9).optimal_return == 1.0);
  CHECK(oracle_lever(LeverConfig{}, 1.0).optimal_return == 1.0);
  CHECK_THROWS_AS(oracle_lever(LeverConfig{}, 1.5), ConfigError);
}

TEST_CASE("predator-prey env: spec and reset placement") {
  PredatorPreyConfig cfg;
  auto env = make_env(cfg);
  const EnvSpec& spec = env->spec();
  CHECK(spec.name == "predator_prey_grid");
  CHECK(spec.n_agents == 2);
  CHECK(spec.n_actions == 5);
  CHECK(spec.obs_dim == 8);   // self xy + prey triple + one other-predator triple
  CHECK(spec.state_dim == 6); // xy per predator, prey last
  CHECK(spec.episode_limit == 20);

  auto other = make_env(cfg);
  std::set<std::vector<double>> starts;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    env->reset(seed);
    other->reset(seed);
    const Vector s = env->state();
    CHECK(s == other->state());  // placement depends only on the seed

    const auto pos = decode_positions(s, cfg.width, cfg.height);
    REQUIRE(pos.size() == 3);
    std::set<std::pair<int, int>> cells;
    for (const auto& c : pos) {
      CHECK(c.x >= 0);
      CHECK(c.x < cfg.width);
      CHECK(c.y >= 0);
      CHECK(c.y < cfg.height);
      cells.insert({c.x, c.y});
    }
    CHECK(cells.size() == 3);  // nobody starts stacked
    starts.insert({s.data(), s.data() + s.size()});
  }
  CHECK(starts.size() > 50);  // seeds actually vary the layout
}

TEST_CASE("predator-prey env: torus movement decoded from the state") {
  PredatorPreyConfig cfg;
  cfg.episode_limit = 50;
  auto env = make_env(cfg);
  env->reset(5);

  auto before = decode_positions(env->state(), cfg.width, cfg.height);
  // stay / north wraps y / east wraps x — prey block may change, preds exact
  env->step({0, 1});
  auto after = decode_positions(env->state(), cfg.width, cfg.height);
  CHECK(after[0].x == before[0].x);
  CHECK(after[0].y == before[0].y);
  CHECK(after[1].x == before[1].x);
  CHECK(after[1].y == wrap_mod(before[1].y - 1, cfg.height));

  before = after;
  env->step({3, 4});
  after = decode_positions(env->state(), cfg.width, cfg.height);
  CHECK(after[0].x == wrap_mod(before[0].x + 1, cfg.width));
  CHECK(after[0].y == before[0].y);
  CHECK(after[1].x == wrap_mod(before[1].x - 1, cfg.width));
  CHECK(after[1].y == before[1].y);

  // the prey moves at most one torus step per tick
  CHECK(manhattan(before[2], after[2], cfg.width, cfg.height) <= 1);
}

TEST_CASE("predator-prey env: observation layout inside the sight window") {
  PredatorPreyConfig cfg;
  cfg.sight_radius = 2;  // covers the whole 4x4 torus
  auto env = make_env(cfg);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env->reset(seed);
    const auto pos = decode_positions(env->state(), cfg.width, cfg.height);
    const double s = static_cast<double>(std::max(cfg.width, cfg.height));
    for (int agent = 0; agent < cfg.n_predators; ++agent) {
      const Vector o = env->observe(agent);
      REQUIRE(o.size() == 8);
      const Cell self = pos[agent];
      CHECK(o(0) == doctest::Approx(self.x / s));
      CHECK(o(1) == doctest::Approx(self.y / s));
      // prey triple first, then the other predator
      const Cell prey = pos[2];
      CHECK(o(2) == 1.0);
      CHECK(o(3) == doctest::Approx(ring_delta(self.x, prey.x, cfg.width) / s));
      CHECK(o(4) == doctest::Approx(ring_delta(self.y, prey.y, cfg.height) / s));
      const Cell mate = pos[1 - agent];
      CHECK(o(5) == 1.0);
      CHECK(o(6) == doctest::Approx(ring_delta(self.x, mate.x, cfg.width) / s));
      CHECK(o(7) == doctest::Approx(ring_delta(self.y, mate.y, cfg.height) / s));
    }
  }
}

TEST_CASE("predator-prey env: sight radius zero blanks every relative block") {
  PredatorPreyConfig cfg;
  cfg.sight_radius = 0;
  auto env = make_env(cfg);
  env->reset(9);
  const auto pos = decode_positions(env->state(), cfg.width, cfg.height);
  const double s = static_cast<double>(std::max(cfg.width, cfg.height));
  for (int agent = 0; agent < cfg.n_predators; ++agent) {
    const Vector o = env->observe(agent);
    CHECK(o(0) == doctest::Approx(pos[agent].x / s));
    CHECK(o(1) == doctest::Approx(pos[agent].y / s));
    for (int i = 2; i < 8; ++i) CHECK(o(i) == 0.0);  // everyone starts apart
  }
}

TEST_CASE("predator-prey env: shaping and step cost land in the reward") {
  PredatorPreyConfig cfg;
  cfg.step_cost = -0.05;
  cfg.shaping = 0.5;
  auto env = make_env(cfg);
  env->reset(17);

  const auto res = env->step({0, 0});
  REQUIRE_FALSE(res.episode_over);
  // shaping is charged on the distances after the prey has moved, which is
  // exactly what the post-step state reports
  const auto pos = decode_positions(env->state(), cfg.width, cfg.height);
  const double dist = manhattan(pos[0], pos[2], cfg.width, cfg.height) +
                      manhattan(pos[1], pos[2], cfg.width, cfg.height);
  const double expected =
      cfg.step_cost - cfg.shaping * dist / (cfg.width + cfg.height);
  CHECK(res.reward == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("predator-prey env: greedy pursuit captures for full reward") {
  PredatorPreyConfig cfg;
  cfg.episode_limit = 60;
  cfg.sight_radius = 2;
  auto env = make_env(cfg);

  int captures = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env->reset(seed);
    for (int t = 0; t < cfg.episode_limit; ++t) {
      const auto pos = decode_positions(env->state(), cfg.width, cfg.height);
      const JointAction u = {
          chase_action(pos[0], pos[2], cfg.width, cfg.height),
          chase_action(pos[1], pos[2], cfg.width, cfg.height)};
      const auto res = env->step(u);
      if (res.episode_over) {
        if (res.env_terminal) {
          ++captures;
          CHECK(res.reward == cfg.step_cost + cfg.capture_reward);
          CHECK(env->success());
          CHECK_THROWS_AS(env->step({0, 0}), EpisodeOverError);
        }
        break;
      }
      CHECK(res.reward == 0.0);  // no cost, no shaping, no capture
    }
  }
  CHECK(captures >= 8);  // the random walk rarely escapes two chasers
}

TEST_CASE("predator-prey env: stalling runs into the time limit") {
  PredatorPreyConfig cfg;
  cfg.episode_limit = 6;
  auto env = make_env(cfg);
  env->reset(1);
  // distinct placements plus all-stay actions make capture impossible
  for (int t = 0; t < cfg.episode_limit - 1; ++t) {
    const auto res = env->step({0, 0});
    CHECK_FALSE(res.episode_over);
  }
  const auto last = env->step({0, 0});
  CHECK(last.episode_over);
  CHECK_FALSE(last.env_terminal);
  CHECK_FALSE(env->success());
}

TEST_CASE("predator-prey config validation") {
  PredatorPreyConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.width = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PredatorPreyConfig{};
  cfg.n_predators = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PredatorPreyConfig{};
  cfg.sight_radius = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PredatorPreyConfig{};
  cfg.episode_limit = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("predator-prey oracle: immediate capture sets the bound") {
  // some enumerated state has both predators one move from the prey, so the
  // fixed point tops out at a first-step capture
  PredatorPreyConfig cfg;
  cfg.width = 2;
  cfg.height = 2;
  CHECK(oracle_predator(cfg, 0.9).optimal_return == doctest::Approx(10.0));

  cfg.step_cost = -0.1;
  CHECK(oracle_predator(cfg, 0.9).optimal_return == doctest::Approx(9.9));

  CHECK_THROWS_AS(oracle_predator(cfg, 1.0), ConfigError);
  CHECK_THROWS_AS(oracle_predator(cfg, -0.1), ConfigError);
}

TEST_CASE("oracle dominance over random rollouts") {
  const double gamma = 0.95;

  SUBCASE("predator-prey with shaping") {
    PredatorPreyConfig cfg;
    cfg.width = 3;
    cfg.height = 3;
    cfg.episode_limit = 10;
    cfg.step_cost = -0.02;
    cfg.shaping = 0.3;
    const double bound = oracle_predator(cfg, gamma).optimal_return;
    auto env = make_env(cfg);
    auto rng = seeded_rng(99, 0x726f6c6cULL);
    for (int ep = 0; ep < 100; ++ep) {
      env->reset(static_cast<std::uint64_t>(ep));
      double ret = 0.0, disc = 1.0;
      for (;;) {
        const JointAction u = {draw_index(rng, 5), draw_index(rng, 5)};
        const auto res = env->step(u);
        ret += disc * res.reward;
        disc *= gamma;
        if (res.episode_over) break;
      }
      CHECK(ret <= bound + 1e-9);
    }
  }

  SUBCASE("lever game") {
    LeverConfig cfg;
    cfg.cue_noise = 0.3;
    const double bound = oracle_lever(cfg, gamma).optimal_return;
    auto env = make_env(cfg);
    auto rng = seeded_rng(7, 0x726f6c6cULL);
    for (int ep = 0; ep < 100; ++ep) {
      env->reset(static_cast<std::uint64_t>(ep));
      double ret = 0.0, disc = 1.0;
      for (;;) {
        const JointAction u = {draw_index(rng, 3), draw_index(rng, 3)};
        const auto res = env->step(u);
        ret += disc * res.reward;
        disc *= gamma;
        if (res.episode_over) break;
      }
      CHECK(ret <= bound + 1e-9);
    }
  }

  SUBCASE("matrix game") {
    const double bound = oracle_matrix(climbing_game()).optimal_return;
    auto env = make_env(climbing_game());
    auto rng = seeded_rng(3, 0x726f6c6cULL);
    for (int ep = 0; ep < 100; ++ep) {
      env->reset(static_cast<std::uint64_t>(ep));
      CHECK(env->step({draw_index(rng, 3), draw_index(rng, 3)}).reward <=
            bound + 1e-9);
    }
  }
}

TEST_CASE("fresh copies replay identically and start unstarted") {
  PredatorPreyConfig cfg;
  auto env = make_env(cfg);
  env->reset(21);
  auto copy = env->fresh();
  CHECK_THROWS_AS(copy->step({0, 0}), Error);  // fresh() does not reset

  copy->reset(21);
  CHECK(copy->state() == env->state());
  for (int t = 0; t < 5; ++t) {
    const auto a = env->step({1, 3});
    const auto b = copy->step({1, 3});
    CHECK(a.reward == b.reward);
    CHECK(a.episode_over == b.episode_over);
    CHECK(env->state() == copy->state());
    if (a.episode_over) break;
  }
}

TEST_CASE("oracle infeasible guards") {
  LeverConfig lever;
  lever.n_agents = 7;
  lever.n_levers = 10;
  CHECK_THROWS_AS(oracle_lever(lever, 0.9), OracleInfeasibleError);

  PredatorPreyConfig pp;
  pp.width = 10;
  pp.height = 10;
  pp.n_predators = 3;
  CHECK_THROWS_AS(oracle_predator(pp, 0.9), OracleInfeasibleError);
}
