#pragma once

#include "npghm/common.hpp"

#include <concepts>
#include <utility>
#include <vector>

namespace npghm {

/// A parameterized stochastic policy pi_theta(a|s) that exposes its score
/// and the Hessian-vector product of its log-density.
///
/// Policies are values: `with_params` returns a new policy, evaluation is
/// const and thread-safe. `declared_mg` bounds ||grad log pi||^2 and
/// `declared_mh` bounds the spectral norm of the log-density Hessian over the
/// whole state-action space.
template <class P>
concept DifferentiablePolicy =
    requires(const P& p, const typename P::State& s, const typename P::Action& a, const Vec& x,
             Rng& rng) {
      typename P::State;
      typename P::Action;
      { p.dim() } -> std::convertible_to<Index>;
      { p.params() } -> std::convertible_to<const Vec&>;
      { p.with_params(x) } -> std::same_as<P>;
      { p.log_prob(s, a) } -> std::convertible_to<double>;
      { p.log_density(s, a) } -> std::convertible_to<double>;
      { p.score(s, a) } -> std::convertible_to<Vec>;
      { p.log_density_hvp(s, a, x) } -> std::convertible_to<Vec>;
      { p.sample_action(s, rng) } -> std::same_as<typename P::Action>;
      { p.declared_mg() } -> std::convertible_to<double>;
      { p.declared_mh() } -> std::convertible_to<double>;
    };

template <class Env, class P>
concept CompatibleWith = DifferentiablePolicy<P> &&
                         std::same_as<typename Env::State, typename P::State> &&
                         std::same_as<typename Env::Action, typename P::Action>;

struct MeasuredBounds {
  double mg_hat = 0.0;    // max ||score||^2 over the sample
  double mh_hat = 0.0;    // max spectral norm of the log-density Hessian
  double mu_f_hat = 0.0;  // smallest eigenvalue of the empirical FIM
};

/// Largest |eigenvalue| of the symmetric operator x -> apply(x), by power
/// iteration from a fixed start vector.
template <class Apply>
double symmetric_spectral_norm(Apply&& apply, Index dim, int iterations = 100) {
  if (dim == 0) return 0.0;
  Vec x = Vec::LinSpaced(dim, 1.0, 2.0).normalized();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec y = apply(x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    estimate = norm;
    x = y / norm;
  }
  return estimate;
}

template <DifferentiablePolicy P>
MeasuredBounds measured_bounds(
    const P& policy,
    const std::vector<std::pair<typename P::State, typename P::Action>>& samples) {
  if (samples.empty()) throw DomainError("measured_bounds: empty sample set");
  const Index d = policy.dim();
  MeasuredBounds out;
  Mat fim = Mat::Zero(d, d);
  for (const auto& [s, a] : samples) {
    const Vec g = policy.score(s, a);
    out.mg_hat = std::max(out.mg_hat, g.squaredNorm());
    fim.noalias() += g * g.transpose();
    const double hess_norm = symmetric_spectral_norm(
        [&](const Vec& x) { return policy.log_density_hvp(s, a, x); }, d);
    out.mh_hat = std::max(out.mh_hat, hess_norm);
  }
  fim /= static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Mat> eig(fim, Eigen::EigenvaluesOnly);
  out.mu_f_hat = eig.eigenvalues().minCoeff();
  return out;
}

}  // namespace npghm
