#pragma once

// Torus-grid helpers shared by the predator-prey environment and its
// value-iteration oracle, so both always see the same dynamics.

#include "marl/envs.hpp"

#include <cmath>

namespace marl::pp {

// action 0 stays put, then north/south/east/west with torus wrap-around
constexpr int kMoves[5][2] = {{0, 0}, {0, -1}, {0, 1}, {1, 0}, {-1, 0}};

inline int wrap(int v, int m) { return ((v % m) + m) % m; }

inline int move_cell(int cell, int action, int w, int h) {
  const int x = cell % w;
  const int y = cell / w;
  return wrap(y + kMoves[action][1], h) * w + wrap(x + kMoves[action][0], w);
}

// shortest signed displacement on a ring of size m
inline int torus_delta(int from, int to, int m) {
  int d = wrap(to - from, m);
  if (d > m / 2) d -= m;
  return d;
}

inline int torus_manhattan(int a, int b, int w, int h) {
  return std::abs(torus_delta(a % w, b % w, w)) +
         std::abs(torus_delta(a / w, b / w, h));
}

inline double shaping_term(const PredatorPreyConfig& cfg,
                           const std::vector<int>& preds, int prey) {
  if (cfg.shaping == 0.0) return 0.0;
  double total = 0.0;
  for (int p : preds) total += torus_manhattan(p, prey, cfg.width, cfg.height);
  return -cfg.shaping * total / static_cast<double>(cfg.width + cfg.height);
}

}  // namespace marl::pp
