#include "npghm/point_mass.hpp"

#include <algorithm>
#include <cmath>

namespace npghm {

PointMassEnv::PointMassEnv(PointMassParams params) : params_(params) {
  const auto& p = params_;
  if (!(p.gamma >= 0.0 && p.gamma < 1.0)) throw ConfigError("PointMassEnv: gamma must lie in [0,1)");
  if (!(p.noise_std >= 0.0)) throw ConfigError("PointMassEnv: noise_std must be nonnegative");
  if (!(p.q_s >= 0.0 && p.q_a >= 0.0)) throw ConfigError("PointMassEnv: cost weights must be nonnegative");
  if (!(p.state_radius > 0.0 && p.action_radius > 0.0)) {
    throw ConfigError("PointMassEnv: radii must be positive");
  }
  if (!(p.init_radius >= 0.0 && p.init_radius <= p.state_radius)) {
    throw ConfigError("PointMassEnv: init_radius must lie in [0, state_radius]");
  }
  cost_scale_ = p.q_s * p.state_radius * p.state_radius + p.q_a * p.action_radius * p.action_radius;
}

PointMassEnv::State PointMassEnv::initial_state(Rng& rng) const {
  if (params_.init_radius == 0.0) return 0.0;
  return params_.init_radius * (2.0 * uniform01(rng) - 1.0);
}

double PointMassEnv::reward(State s, Action a) const {
  if (cost_scale_ == 0.0) return 0.0;
  const double cost = (params_.q_s * s * s + params_.q_a * a * a) / cost_scale_;
  return std::max(-1.0, -cost);
}

StepResult<PointMassEnv::State> PointMassEnv::step(State s, Action a, Rng& rng) const {
  double next = params_.a_dyn * s + params_.b_dyn * a;
  if (params_.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, params_.noise_std);
    next += noise(rng);
  }
  next = std::clamp(next, -params_.state_radius, params_.state_radius);
  return {next, reward(s, a)};
}

}  // namespace npghm
