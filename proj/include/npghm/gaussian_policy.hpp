#pragma once

#include "npghm/common.hpp"
#include "npghm/point_mass.hpp"

#include <limits>
#include <string>

namespace npghm {

/// Bounded features of a scalar state.
///   linear: phi(s) = (s / scale)
///   affine: phi(s) = (s / scale, 1)
/// `state_bound` is the largest |s| the map will see; it fixes R_phi.
struct FeatureMap {
  enum class Kind { kLinear, kAffine };

  Kind kind = Kind::kAffine;
  double scale = 1.0;
  double state_bound = 1.0;

  Index dim() const { return kind == Kind::kLinear ? 1 : 2; }
  Vec operator()(double s) const;
  /// sup_{|s| <= state_bound} ||phi(s)||.
  double radius() const;

  static FeatureMap for_env(const PointMassEnv& env, Kind kind = Kind::kAffine);
};

std::string to_string(FeatureMap::Kind kind);
FeatureMap::Kind parse_feature_kind(const std::string& name);

/// Gaussian policy N(theta^T phi(s), sigma^2) truncated to
/// [mu(s) - c sigma, mu(s) + c sigma]. The window is centred on the mean, so
/// the normalizer erf(c / sqrt 2) does not depend on theta and the score is
/// (a - mu) phi / sigma^2 with norm at most c R_phi / sigma.
/// c = +inf gives the untruncated Gaussian.
class TruncatedLinearGaussianPolicy {
 public:
  using State = double;
  using Action = double;

  TruncatedLinearGaussianPolicy(FeatureMap features, double sigma, double c = 3.0);
  TruncatedLinearGaussianPolicy(FeatureMap features, double sigma, double c, Vec theta);

  Index dim() const { return theta_.size(); }
  const Vec& params() const { return theta_; }
  TruncatedLinearGaussianPolicy with_params(Vec theta) const;

  const FeatureMap& features() const { return features_; }
  double sigma() const { return sigma_; }
  double truncation() const { return c_; }
  double mean(State s) const { return theta_.dot(features_(s)); }
  bool in_support(State s, Action a) const;

  /// Throws SupportError outside the truncation window.
  double log_prob(State s, Action a) const;
  /// Same as log_prob but returns -inf outside the support.
  double log_density(State s, Action a) const;
  Vec score(State s, Action a) const;
  /// Hessian is -phi phi^T / sigma^2.
  Vec log_density_hvp(State s, Action a, const Vec& x) const;
  Action sample_action(State s, Rng& rng) const;

  /// (c R_phi / sigma)^2; +inf when untruncated.
  double declared_mg() const;
  /// R_phi^2 / sigma^2.
  double declared_mh() const;

 private:
  FeatureMap features_;
  double sigma_;
  double c_;
  double log_norm_;  // log(sigma sqrt(2 pi) Z)
  Vec theta_;
};

inline void check_compatible(const PointMassEnv&, const TruncatedLinearGaussianPolicy&) {}

}  // namespace npghm
