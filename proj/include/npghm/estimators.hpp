#pragma once

#include "npghm/common.hpp"
#include "npghm/policy.hpp"
#include "npghm/sampling.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace npghm {

/// R_h = sum_{i=h}^{H-1} gamma^i r^i for every h, by one reverse pass.
/// The discount is measured from the start of the trajectory, not from h.
template <class S, class A>
Vec reward_to_go(const Trajectory<S, A>& traj, double gamma) {
  const int horizon = traj.horizon();
  Vec discounts(horizon);
  double g = 1.0;
  for (int h = 0; h < horizon; ++h) {
    discounts[h] = g;
    g *= gamma;
  }
  Vec out(horizon);
  double acc = 0.0;
  for (int h = horizon - 1; h >= 0; --h) {
    acc += discounts[h] * traj.rewards[h];
    out[h] = acc;
  }
  return out;
}

/// g(tau; theta) = sum_h R_h grad log pi(a^h | s^h). Unbiased for the gradient
/// of the H-truncated objective when tau is drawn under `policy`.
template <DifferentiablePolicy P>
Vec truncated_grad(const Trajectory<typename P::State, typename P::Action>& traj,
                   const P& policy, double gamma) {
  if (traj.horizon() == 0) throw DomainError("truncated_grad: empty trajectory");
  const Vec togo = reward_to_go(traj, gamma);
  Vec g = Vec::Zero(policy.dim());
  for (int h = 0; h < traj.horizon(); ++h) {
    if (togo[h] != 0.0) g.noalias() += togo[h] * policy.score(traj.states[h], traj.actions[h]);
  }
  return g;
}

enum class BaselineForm {
  /// sum_h sum_{i>=h} (gamma^i r^i - b(s^h)) score_h, i.e. (H - h) b(s^h) per step.
  kLiteral,
  /// sum_h (R_h - gamma^h b(s^h)) score_h, the usual advantage-style baseline.
  kPerStep,
};

template <DifferentiablePolicy P>
Vec baseline_grad(const Trajectory<typename P::State, typename P::Action>& traj, const P& policy,
                  double gamma, const std::function<double(const typename P::State&)>& baseline,
                  BaselineForm form = BaselineForm::kLiteral) {
  if (traj.horizon() == 0) throw DomainError("baseline_grad: empty trajectory");
  const int horizon = traj.horizon();
  const Vec togo = reward_to_go(traj, gamma);
  Vec g = Vec::Zero(policy.dim());
  double discount = 1.0;
  for (int h = 0; h < horizon; ++h) {
    const double b = baseline(traj.states[h]);
    const double offset =
        form == BaselineForm::kLiteral ? static_cast<double>(horizon - h) * b : discount * b;
    const double weight = togo[h] - offset;
    if (weight != 0.0) g.noalias() += weight * policy.score(traj.states[h], traj.actions[h]);
    discount *= gamma;
  }
  return g;
}

/// H(tau; theta) x = <grad log p(tau), x> g(tau; theta) + sum_h R_h hess log pi_h x,
/// in O(H d) without forming the Hessian.
template <DifferentiablePolicy P>
Vec hessian_vector_product(const Trajectory<typename P::State, typename P::Action>& traj,
                           const P& policy, double gamma, const Vec& x) {
  require_dim(x.size(), policy.dim(), "hessian_vector_product");
  if (traj.horizon() == 0) throw DomainError("hessian_vector_product: empty trajectory");
  const Vec togo = reward_to_go(traj, gamma);
  Vec g = Vec::Zero(policy.dim());
  Vec curvature = Vec::Zero(policy.dim());
  double log_lik_dot_x = 0.0;
  for (int h = 0; h < traj.horizon(); ++h) {
    const auto& s = traj.states[h];
    const auto& a = traj.actions[h];
    const Vec score = policy.score(s, a);
    log_lik_dot_x += score.dot(x);
    if (togo[h] != 0.0) {
      g.noalias() += togo[h] * score;
      curvature.noalias() += togo[h] * policy.log_density_hvp(s, a, x);
    }
  }
  return log_lik_dot_x * g + curvature;
}

/// Log-weights above this are flagged as numerically unstable.
inline constexpr double kImportanceLogWeightFlag = 30.0;

struct ImportanceWeight {
  double value = 1.0;
  double log_value = 0.0;
  bool flagged = false;  // log_value > kImportanceLogWeightFlag
};

/// omega(tau | old, new) = prod_h pi_old(a^h|s^h) / pi_new(a^h|s^h), accumulated
/// in log space. An action outside the old policy's support gives weight 0;
/// one outside the new policy's support is a SupportError.
template <DifferentiablePolicy P>
ImportanceWeight importance_weight_detail(
    const Trajectory<typename P::State, typename P::Action>& traj, const P& policy_old,
    const P& policy_new) {
  double log_w = 0.0;
  for (int h = 0; h < traj.horizon(); ++h) {
    const double lp_new = policy_new.log_density(traj.states[h], traj.actions[h]);
    if (std::isinf(lp_new)) throw SupportError("importance_weight: zero density under new policy");
    log_w += policy_old.log_density(traj.states[h], traj.actions[h]) - lp_new;
  }
  ImportanceWeight w;
  w.log_value = log_w;
  w.value = std::exp(log_w);
  w.flagged = log_w > kImportanceLogWeightFlag;
  return w;
}

template <DifferentiablePolicy P>
double importance_weight(const Trajectory<typename P::State, typename P::Action>& traj,
                         const P& policy_old, const P& policy_new) {
  return importance_weight_detail(traj, policy_old, policy_new).value;
}

/// Running gradient estimate of a momentum recursion: u_t together with
/// theta_{t-1} (the parameter u_t was formed at) and the step index t.
struct MomentumState {
  Vec u;
  Vec prev_theta;
  int t = 1;
};

/// u_1 = g(tau_1; theta_1), t = 1.
inline MomentumState initial_momentum(Vec u, Vec theta) {
  require_dim(u.size(), theta.size(), "initial_momentum");
  return MomentumState{std::move(u), std::move(theta), 1};
}

inline void check_momentum_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw DomainError("momentum beta must lie in (0, 1], got " + std::to_string(beta));
  }
}

/// u_t = beta g(tau_t; theta_t) + (1 - beta)(u_{t-1} + H(tau_hat; theta_hat)(theta_t - theta_{t-1})).
/// `traj` is drawn at theta_t and `traj_hat` at theta_hat = q theta_t + (1-q) theta_{t-1}.
template <DifferentiablePolicy P>
MomentumState momentum_update_hessian(
    const MomentumState& state, const Vec& theta,
    const Trajectory<typename P::State, typename P::Action>& traj,
    const Trajectory<typename P::State, typename P::Action>& traj_hat, const Vec& theta_hat,
    double beta, const P& prototype, double gamma) {
  check_momentum_beta(beta);
  require_dim(theta.size(), state.prev_theta.size(), "momentum_update_hessian theta");
  require_dim(theta_hat.size(), theta.size(), "momentum_update_hessian theta_hat");
  const Vec fresh = truncated_grad(traj, prototype.with_params(theta), gamma);
  MomentumState next;
  next.t = state.t + 1;
  next.prev_theta = theta;
  if (beta == 1.0) {
    next.u = fresh;
    return next;
  }
  const Vec step = theta - state.prev_theta;
  Vec correction = state.u;
  if (!step.isZero(0.0)) {
    correction += hessian_vector_product(traj_hat, prototype.with_params(theta_hat), gamma, step);
  }
  next.u = beta * fresh + (1.0 - beta) * correction;
  return next;
}

/// v_t = beta g(tau_t; theta_t) + (1 - beta)(v_{t-1} + g(tau_t; theta_t) - omega g(tau_t; theta_{t-1})).
/// `weight_out`, when given, receives the importance weight used.
template <DifferentiablePolicy P>
MomentumState momentum_update_is(const MomentumState& state, const Vec& theta,
                                 const Trajectory<typename P::State, typename P::Action>& traj,
                                 double beta, const P& prototype, double gamma,
                                 ImportanceWeight* weight_out = nullptr) {
  check_momentum_beta(beta);
  require_dim(theta.size(), state.prev_theta.size(), "momentum_update_is theta");
  const P current = prototype.with_params(theta);
  const Vec fresh = truncated_grad(traj, current, gamma);
  MomentumState next;
  next.t = state.t + 1;
  next.prev_theta = theta;
  if (beta == 1.0) {
    next.u = fresh;
    return next;
  }
  Vec difference = Vec::Zero(theta.size());
  if (theta != state.prev_theta) {
    const P previous = prototype.with_params(state.prev_theta);
    const ImportanceWeight w = importance_weight_detail(traj, previous, current);
    if (weight_out) *weight_out = w;
    difference = fresh;
    // Weight 0 means tau left the old policy's support; the old-gradient term vanishes.
    if (w.value != 0.0) difference -= w.value * truncated_grad(traj, previous, gamma);
  } else if (weight_out) {
    *weight_out = ImportanceWeight{};
  }
  next.u = beta * fresh + (1.0 - beta) * (state.u + difference);
  return next;
}

}  // namespace npghm
