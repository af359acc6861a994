#include "marl/core.hpp"

#include <algorithm>

namespace marl {

std::vector<double> discounted_returns(const std::vector<double>& rewards,
                                       double gamma) {
  if (rewards.empty()) throw EmptyEpisodeError("discounted_returns: empty episode");
  std::vector<double> ret(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    ret[i] = acc;
  }
  return ret;
}

double EpsilonSchedule::at(long long step) const {
  if (step < 0) throw Error("epsilon schedule: negative step");
  if (anneal_steps <= 0 || step >= anneal_steps) return end;
  double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
  return start + (end - start) * frac;
}

void ReplayBuffer::store(Episode ep) {
  if (ep.steps.empty()) throw EmptyEpisodeError("replay buffer: empty episode");
  episodes_.push_back(std::move(ep));
  if (episodes_.size() > capacity_) episodes_.pop_front();
}

std::optional<std::vector<Episode>> ReplayBuffer::sample(
    std::size_t batch, std::mt19937_64& rng) const {
  if (batch == 0) throw ConfigError("replay buffer: batch must be positive");
  if (episodes_.size() < batch) return std::nullopt;
  // Partial Fisher-Yates over the index range: uniform without replacement.
  std::vector<std::size_t> idx(episodes_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Episode> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    std::size_t j = i + static_cast<std::size_t>(
                            draw_index(rng, static_cast<int>(idx.size() - i)));
    std::swap(idx[i], idx[j]);
    out.push_back(episodes_[idx[i]]);
  }
  return out;
}

Batch pad_batch(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw EmptyEpisodeError("pad_batch: no episodes");
  Batch b;
  b.batch = static_cast<int>(episodes.size());
  b.n_agents = static_cast<int>(episodes.front().steps.front().obs.size());
  const auto obs_dim = episodes.front().steps.front().obs.front().size();
  const auto state_dim = episodes.front().steps.front().state.size();

  for (const auto& ep : episodes) {
    if (ep.steps.empty()) throw EmptyEpisodeError("pad_batch: empty episode");
    b.t_max = std::max(b.t_max, ep.length());
    b.lengths.push_back(ep.length());
    for (const auto& tr : ep.steps) {
      if (static_cast<int>(tr.obs.size()) != b.n_agents ||
          tr.obs.front().size() != obs_dim || tr.state.size() != state_dim) {
        throw ShapeError("pad_batch: inconsistent episode shapes");
      }
    }
  }

  const int cols = b.batch * b.n_agents;
  b.obs.assign(b.t_max + 1, Matrix::Zero(obs_dim, cols));
  b.state.assign(b.t_max + 1, Matrix::Zero(state_dim, b.batch));
  b.actions.assign(b.t_max, std::vector<JointAction>(
                                b.batch, JointAction(b.n_agents, 0)));
  b.reward = Matrix::Zero(b.batch, b.t_max);
  b.terminal = Matrix::Zero(b.batch, b.t_max);
  b.mask = Matrix::Zero(b.batch, b.t_max);

  for (int e = 0; e < b.batch; ++e) {
    const Episode& ep = episodes[e];
    for (int t = 0; t < ep.length(); ++t) {
      const Transition& tr = ep.steps[t];
      for (int a = 0; a < b.n_agents; ++a)
        b.obs[t].col(e * b.n_agents + a) = tr.obs[a];
      b.state[t].col(e) = tr.state;
      b.actions[t][e] = tr.action;
      b.reward(e, t) = tr.reward;
      b.terminal(e, t) = tr.terminal ? 1.0 : 0.0;
      b.mask(e, t) = 1.0;
    }
    // Post-episode slot: lets step len-1 bootstrap from what came after it.
    for (int a = 0; a < b.n_agents; ++a)
      b.obs[ep.length()].col(e * b.n_agents + a) = ep.final_obs[a];
    b.state[ep.length()].col(e) = ep.final_state;
  }
  return b;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

int draw_index(std::mt19937_64& rng, int n) {
  if (n <= 0) throw Error("draw_index: empty range");
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace marl
