#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace npghm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Every sampling routine takes an explicit generator; nothing in the library
// owns global random state.
using Rng = std::mt19937_64;

/// Invalid or inconsistent configuration (mismatched spaces, bad schedule
/// parameters, unparsable spec files).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An action lies outside a policy's support, or a density ratio has a
/// zero denominator.
class SupportError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(got) +
                         " does not match " + std::to_string(want));
  }
}

/// Uniform draw on [0, 1) built from the top 53 bits of the generator, so the
/// stream of doubles is identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace npghm
