#pragma once

#include "npghm/common.hpp"
#include "npghm/tabular_mdp.hpp"

namespace npghm {

/// Scalar linear system with quadratic cost:
///   s' = clip(a_dyn * s + b_dyn * a + noise_std * N(0,1), [-state_radius, state_radius])
///   r  = max(-1, -(q_s s^2 + q_a a^2) / (q_s state_radius^2 + q_a action_radius^2))
/// so rewards stay in [-1, 0]. Initial states are uniform on [-init_radius, init_radius].
struct PointMassParams {
  double a_dyn = 1.0;
  double b_dyn = 0.5;
  double noise_std = 0.05;
  double q_s = 1.0;
  double q_a = 0.1;
  double state_radius = 2.0;
  double action_radius = 2.0;
  double init_radius = 1.0;
  double gamma = 0.9;
};

class PointMassEnv {
 public:
  using State = double;
  using Action = double;

  explicit PointMassEnv(PointMassParams params = {});

  const PointMassParams& params() const { return params_; }
  double gamma() const { return params_.gamma; }

  State initial_state(Rng& rng) const;
  StepResult<State> step(State s, Action a, Rng& rng) const;
  double reward(State s, Action a) const;

 private:
  PointMassParams params_;
  double cost_scale_;
};

}  // namespace npghm
