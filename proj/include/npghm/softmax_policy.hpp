#pragma once

#include "npghm/common.hpp"
#include "npghm/tabular_mdp.hpp"

namespace npghm {

/// pi(a|s) = exp(theta[s][a]) / sum_b exp(theta[s][b]); theta is stored
/// row-major as a flat vector of length n_states * n_actions.
class TabularSoftmaxPolicy {
 public:
  using State = int;
  using Action = int;

  TabularSoftmaxPolicy(int n_states, int n_actions);
  TabularSoftmaxPolicy(int n_states, int n_actions, Vec theta);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  Index dim() const { return theta_.size(); }
  const Vec& params() const { return theta_; }
  TabularSoftmaxPolicy with_params(Vec theta) const;

  Vec probabilities(State s) const;
  /// n_states x n_actions table of pi(a|s).
  Mat probability_table() const;

  double log_prob(State s, Action a) const;
  double log_density(State s, Action a) const { return log_prob(s, a); }
  /// e_{s,a} - sum_b pi(b|s) e_{s,b}.
  Vec score(State s, Action a) const;
  /// Block s of the Hessian is -(diag(pi_s) - pi_s pi_s^T), independent of a.
  Vec log_density_hvp(State s, Action a, const Vec& x) const;
  Action sample_action(State s, Rng& rng) const;

  /// ||e_a - pi||^2 = (1 - pi_a)^2 + sum_{b != a} pi_b^2 <= 2.
  double declared_mg() const { return 2.0; }
  /// Gershgorin on diag(p) - p p^T: row i sums to 2 p_i (1 - p_i) <= 1/2.
  double declared_mh() const { return 0.5; }

 private:
  void check(State s, Action a) const;
  Index block(State s) const { return static_cast<Index>(s) * n_actions_; }

  int n_states_;
  int n_actions_;
  Vec theta_;
};

/// Throws ConfigError unless the policy's state/action counts match the MDP.
void check_compatible(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy);

}  // namespace npghm
