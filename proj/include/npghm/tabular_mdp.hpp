#pragma once

#include "npghm/common.hpp"

#include <string>
#include <vector>

namespace npghm {

template <class S>
struct StepResult {
  S next_state;
  double reward;
};

/// Finite MDP (S, A, P, r, gamma) with rewards in [-1, 1].
///
/// Transition and reward tensors are stored row-major as [s][a][s'].
/// Construction validates every invariant; an instance is immutable afterwards.
class TabularMdp {
 public:
  using State = int;
  using Action = int;

  TabularMdp(int n_states, int n_actions, std::vector<double> transition,
             std::vector<double> reward, Vec init_dist, double gamma);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  const Vec& init_dist() const { return init_dist_; }

  double transition(int s, int a, int next) const { return transition_[offset(s, a) + next]; }
  double reward(int s, int a, int next) const { return reward_[offset(s, a) + next]; }
  /// r(s,a) = sum_{s'} P(s'|s,a) r(s,a,s').
  double expected_reward(int s, int a) const;

  const std::vector<double>& transition_table() const { return transition_; }
  const std::vector<double>& reward_table() const { return reward_; }

  State initial_state(Rng& rng) const;
  StepResult<State> step(State s, Action a, Rng& rng) const;

  TabularMdp with_gamma(double gamma) const;
  /// Same dynamics with every reward scaled by `factor` (|factor| <= 1).
  TabularMdp with_scaled_rewards(double factor) const;

 private:
  std::size_t offset(int s, int a) const {
    return (static_cast<std::size_t>(s) * n_actions_ + a) * n_states_;
  }

  int n_states_;
  int n_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  Vec init_dist_;
  double gamma_;
};

/// n-state chain with actions {0: left, 1: right}, deterministic moves, a
/// reward of 1 for moving right from the right end, a distractor reward of
/// `left_reward` for moving left at state 0, and a uniform initial
/// distribution. With probability `slip` the opposite move is taken.
TabularMdp chain(int n, double gamma = 0.9, double left_reward = 0.1, double slip = 0.0);

/// Dense random MDP: Dirichlet(1) transition rows, rewards uniform in [-1, 1],
/// Dirichlet(1) initial distribution.
TabularMdp random_mdp(int n_states, int n_actions, std::uint64_t seed, double gamma = 0.9);

/// Single-state MDP whose action a pays `rewards[a]` forever.
TabularMdp bandit(const std::vector<double>& rewards, double gamma = 0.9);

/// Plain-text format:
///
///   n_states n_actions
///   gamma
///   rho[0] ... rho[n_states-1]
///   P[s][a][s'] (n_states*n_actions*n_states values, row-major)
///   r[s][a][s'] (same layout)
///
/// Whitespace separated; '#' starts a comment that runs to end of line.
TabularMdp parse_mdp(const std::string& text);
TabularMdp load_mdp(const std::string& path);
std::string format_mdp(const TabularMdp& mdp);

}  // namespace npghm
