#include "npghm/softmax_policy.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace npghm {

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int n_states, int n_actions)
    : TabularSoftmaxPolicy(n_states, n_actions,
                           Vec::Zero(static_cast<Index>(n_states) * n_actions)) {}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int n_states, int n_actions, Vec theta)
    : n_states_(n_states), n_actions_(n_actions), theta_(std::move(theta)) {
  if (n_states_ < 1 || n_actions_ < 1) throw ConfigError("TabularSoftmaxPolicy: counts must be positive");
  require_dim(theta_.size(), static_cast<Index>(n_states_) * n_actions_, "TabularSoftmaxPolicy theta");
}

TabularSoftmaxPolicy TabularSoftmaxPolicy::with_params(Vec theta) const {
  return TabularSoftmaxPolicy(n_states_, n_actions_, std::move(theta));
}

void TabularSoftmaxPolicy::check(State s, Action a) const {
  if (s < 0 || s >= n_states_) throw DomainError("softmax policy: state out of range");
  if (a < 0 || a >= n_actions_) throw SupportError("softmax policy: action out of range");
}

Vec TabularSoftmaxPolicy::probabilities(State s) const {
  if (s < 0 || s >= n_states_) throw DomainError("softmax policy: state out of range");
  const auto logits = theta_.segment(block(s), n_actions_);
  const double top = logits.maxCoeff();
  Vec p(n_actions_);
  for (int a = 0; a < n_actions_; ++a) {
    // Entries equal to the max map to exp(0) even when the max is +inf.
    p[a] = logits[a] == top ? 1.0 : std::exp(logits[a] - top);
  }
  return p / p.sum();
}

Mat TabularSoftmaxPolicy::probability_table() const {
  Mat table(n_states_, n_actions_);
  for (int s = 0; s < n_states_; ++s) table.row(s) = probabilities(s).transpose();
  return table;
}

double TabularSoftmaxPolicy::log_prob(State s, Action a) const {
  check(s, a);
  const auto logits = theta_.segment(block(s), n_actions_);
  const double top = logits.maxCoeff();
  if (std::isinf(top)) return std::log(probabilities(s)[a]);
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits[a] - lse;
}

Vec TabularSoftmaxPolicy::score(State s, Action a) const {
  check(s, a);
  Vec g = Vec::Zero(dim());
  g.segment(block(s), n_actions_) = -probabilities(s);
  g[block(s) + a] += 1.0;
  return g;
}

Vec TabularSoftmaxPolicy::log_density_hvp(State s, Action a, const Vec& x) const {
  check(s, a);
  require_dim(x.size(), dim(), "softmax log_density_hvp");
  const Vec p = probabilities(s);
  const auto xs = x.segment(block(s), n_actions_);
  Vec out = Vec::Zero(dim());
  out.segment(block(s), n_actions_) = -(p.cwiseProduct(xs) - p * p.dot(xs));
  return out;
}

TabularSoftmaxPolicy::Action TabularSoftmaxPolicy::sample_action(State s, Rng& rng) const {
  const Vec p = probabilities(s);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int a = 0; a < n_actions_; ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  for (int a = n_actions_ - 1; a >= 0; --a) {
    if (p[a] > 0.0) return a;
  }
  return n_actions_ - 1;
}

void check_compatible(const TabularMdp& mdp, const TabularSoftmaxPolicy& policy) {
  if (mdp.n_states() != policy.n_states() || mdp.n_actions() != policy.n_actions()) {
    throw ConfigError("policy has " + std::to_string(policy.n_states()) + "x" +
                      std::to_string(policy.n_actions()) + " state/action space but MDP has " +
                      std::to_string(mdp.n_states()) + "x" + std::to_string(mdp.n_actions()));
  }
}

}  // namespace npghm
