#pragma once

#include "npghm/config.hpp"
#include "npghm/gaussian_policy.hpp"
#include "npghm/point_mass.hpp"
#include "npghm/softmax_policy.hpp"
#include "npghm/tabular_mdp.hpp"

#include <string>
#include <variant>

namespace npghm {

using AnyEnv = std::variant<TabularMdp, PointMassEnv>;
using AnyPolicy = std::variant<TabularSoftmaxPolicy, TruncatedLinearGaussianPolicy>;

/// Environment spec strings:
///   chainN             n-state chain, e.g. chain5
///   random:SxA:SEED    dense random MDP, e.g. random:5x3:7
///   bandit:R0,R1,...   single-state bandit
///   pointmass          point-mass task; parameters from env.pointmass.* keys
///   file:PATH          tabular MDP in the plain-text format
/// `env.gamma` overrides the discount of any of them.
AnyEnv make_env(const std::string& spec, const KeyValueConfig& extra = {});

std::string describe(const AnyEnv& env);

/// Softmax for tabular envs, truncated Gaussian for the point mass, unless
/// `spec.kind` forces one (a mismatch is a ConfigError). Parameters come from
/// spec.init_path when set, else zeros.
AnyPolicy make_policy(const AnyEnv& env, const PolicySpec& spec);

/// Text form: a header of `key value` lines followed by `theta` and one hex
/// float per line. Round trips are bit-exact.
std::string serialize_policy(const AnyPolicy& policy);
AnyPolicy parse_policy(const std::string& text);
void save_policy(const AnyPolicy& policy, const std::string& path);
AnyPolicy load_policy(const std::string& path);

}  // namespace npghm
