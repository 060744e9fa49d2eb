#pragma once

#include "npghm/common.hpp"
#include "npghm/policy.hpp"
#include "npghm/tabular_mdp.hpp"

#include <cmath>
#include <concepts>
#include <utility>
#include <vector>

namespace npghm {

template <class E>
concept Environment = requires(const E& env, const typename E::State& s,
                               const typename E::Action& a, Rng& rng) {
  typename E::State;
  typename E::Action;
  { env.initial_state(rng) } -> std::same_as<typename E::State>;
  { env.step(s, a, rng) } -> std::same_as<StepResult<typename E::State>>;
  { env.gamma() } -> std::convertible_to<double>;
};

/// (s^0, a^0, r^0, ..., s^{H-1}, a^{H-1}, r^{H-1}, s^H) from the truncated
/// trajectory distribution.
template <class S, class A>
struct Trajectory {
  std::vector<S> states;  // H + 1 entries
  std::vector<A> actions;
  std::vector<double> rewards;

  int horizon() const { return static_cast<int>(actions.size()); }
};

template <Environment Env, class Policy>
  requires CompatibleWith<Env, Policy>
Trajectory<typename Env::State, typename Env::Action> sample_trajectory(const Env& env,
                                                                        const Policy& policy,
                                                                        int horizon, Rng& rng) {
  if (horizon < 1) throw ConfigError("sample_trajectory: horizon must be >= 1");
  check_compatible(env, policy);
  Trajectory<typename Env::State, typename Env::Action> traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  auto s = env.initial_state(rng);
  traj.states.push_back(s);
  for (int h = 0; h < horizon; ++h) {
    const auto a = policy.sample_action(s, rng);
    const auto step = env.step(s, a, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(step.reward);
    s = step.next_state;
    traj.states.push_back(s);
  }
  return traj;
}

/// sum_{h<H} gamma^h r^h.
template <class S, class A>
double discounted_return(const Trajectory<S, A>& traj, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discounted_return: gamma must lie in [0,1)");
  double total = 0.0;
  double discount = 1.0;
  for (double r : traj.rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

/// Geometric draws longer than this are rejected and redrawn:
/// 10 * ceil(1 / (1 - gamma)).
inline int geometric_horizon_cap(double gamma) {
  // 1/(1-0.9) evaluates to 10.000000000000002; absorb that rounding.
  return 10 * static_cast<int>(std::ceil(1.0 / (1.0 - gamma) - 1e-9));
}

/// h ~ Geometric(1 - gamma) on {0, 1, ...}, redrawn above the cap.
inline int sample_geometric_horizon(double gamma, Rng& rng) {
  if (gamma == 0.0) return 0;
  const int cap = geometric_horizon_cap(gamma);
  const double log_gamma = std::log(gamma);
  for (;;) {
    // Inverse CDF: P(h >= k) = gamma^k.
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const double h = std::floor(std::log(u) / log_gamma);
    if (h <= cap) return static_cast<int>(h);
  }
}

/// One draw from the discounted state-action visitation d~(s,a) =
/// d(s) pi(a|s): roll the policy for a geometric number of steps from s^0 ~ rho
/// and return the pair reached.
template <Environment Env, class Policy>
  requires CompatibleWith<Env, Policy>
std::pair<typename Env::State, typename Env::Action> sample_state_action(const Env& env,
                                                                         const Policy& policy,
                                                                         Rng& rng) {
  check_compatible(env, policy);
  const int h = sample_geometric_horizon(env.gamma(), rng);
  auto s = env.initial_state(rng);
  for (int i = 0; i < h; ++i) {
    const auto a = policy.sample_action(s, rng);
    s = env.step(s, a, rng).next_state;
  }
  return {s, policy.sample_action(s, rng)};
}

}  // namespace npghm
