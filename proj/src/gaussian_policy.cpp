#include "npghm/gaussian_policy.hpp"

#include <cmath>
#include <numbers>

namespace npghm {

Vec FeatureMap::operator()(double s) const {
  Vec phi(dim());
  phi[0] = s / scale;
  if (kind == Kind::kAffine) phi[1] = 1.0;
  return phi;
}

double FeatureMap::radius() const {
  const double r = state_bound / scale;
  return kind == Kind::kLinear ? r : std::sqrt(r * r + 1.0);
}

FeatureMap FeatureMap::for_env(const PointMassEnv& env, Kind kind) {
  const double r = env.params().state_radius;
  return FeatureMap{kind, r, r};
}

std::string to_string(FeatureMap::Kind kind) {
  return kind == FeatureMap::Kind::kLinear ? "linear" : "affine";
}

FeatureMap::Kind parse_feature_kind(const std::string& name) {
  if (name == "linear") return FeatureMap::Kind::kLinear;
  if (name == "affine") return FeatureMap::Kind::kAffine;
  throw ConfigError("unknown feature map '" + name + "'");
}

TruncatedLinearGaussianPolicy::TruncatedLinearGaussianPolicy(FeatureMap features, double sigma,
                                                             double c)
    : TruncatedLinearGaussianPolicy(features, sigma, c, Vec::Zero(features.dim())) {}

TruncatedLinearGaussianPolicy::TruncatedLinearGaussianPolicy(FeatureMap features, double sigma,
                                                             double c, Vec theta)
    : features_(features), sigma_(sigma), c_(c), theta_(std::move(theta)) {
  if (!(sigma_ > 0.0)) throw ConfigError("Gaussian policy: sigma must be positive");
  if (!(c_ > 0.0)) throw ConfigError("Gaussian policy: truncation c must be positive");
  if (!(features_.scale > 0.0 && features_.state_bound > 0.0)) {
    throw ConfigError("Gaussian policy: feature scale and bound must be positive");
  }
  require_dim(theta_.size(), features_.dim(), "Gaussian policy theta");
  const double z = std::isinf(c_) ? 1.0 : std::erf(c_ / std::numbers::sqrt2);
  log_norm_ = std::log(sigma_ * std::sqrt(2.0 * std::numbers::pi) * z);
}

TruncatedLinearGaussianPolicy TruncatedLinearGaussianPolicy::with_params(Vec theta) const {
  return TruncatedLinearGaussianPolicy(features_, sigma_, c_, std::move(theta));
}

bool TruncatedLinearGaussianPolicy::in_support(State s, Action a) const {
  return std::abs(a - mean(s)) <= c_ * sigma_;
}

double TruncatedLinearGaussianPolicy::log_density(State s, Action a) const {
  const double z = (a - mean(s)) / sigma_;
  if (!(std::abs(z) <= c_)) return -std::numeric_limits<double>::infinity();
  return -0.5 * z * z - log_norm_;
}

double TruncatedLinearGaussianPolicy::log_prob(State s, Action a) const {
  const double lp = log_density(s, a);
  if (std::isinf(lp)) throw SupportError("Gaussian policy: action outside truncated support");
  return lp;
}

Vec TruncatedLinearGaussianPolicy::score(State s, Action a) const {
  const Vec phi = features_(s);
  const double diff = a - theta_.dot(phi);
  if (!(std::abs(diff) <= c_ * sigma_)) {
    throw SupportError("Gaussian policy: action outside truncated support");
  }
  return phi * (diff / (sigma_ * sigma_));
}

Vec TruncatedLinearGaussianPolicy::log_density_hvp(State s, Action a, const Vec& x) const {
  require_dim(x.size(), dim(), "Gaussian log_density_hvp");
  if (!in_support(s, a)) throw SupportError("Gaussian policy: action outside truncated support");
  const Vec phi = features_(s);
  return phi * (-phi.dot(x) / (sigma_ * sigma_));
}

TruncatedLinearGaussianPolicy::Action TruncatedLinearGaussianPolicy::sample_action(State s,
                                                                                   Rng& rng) const {
  const double mu = mean(s);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Acceptance probability is erf(c / sqrt 2) >= 0.997 for c >= 3.
  for (;;) {
    const double z = normal(rng);
    if (std::abs(z) <= c_) return mu + sigma_ * z;
  }
}

double TruncatedLinearGaussianPolicy::declared_mg() const {
  const double bound = c_ * features_.radius() / sigma_;
  return bound * bound;
}

double TruncatedLinearGaussianPolicy::declared_mh() const {
  const double r = features_.radius();
  return r * r / (sigma_ * sigma_);
}

}  // namespace npghm
