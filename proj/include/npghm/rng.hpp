#pragma once

#include "npghm/common.hpp"

#include <cstdint>
#include <string_view>

namespace npghm {

/// Named random streams derived from one master seed. Each stream is an
/// independent generator, so consuming one never shifts another.
enum class Stream : std::uint64_t {
  kTrajectory = 1,
  kSubproblem = 2,
  kInterpolation = 3,  // q ~ Unif(0,1) draws for the Hessian-aided estimator
  kEvaluation = 4,
  kInit = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based split: the generator for (seed, stream) is seeded with a
/// splitmix64 hash of both, so streams are reproducible in isolation.
Rng make_stream(std::uint64_t master_seed, Stream stream);

/// Same split keyed by an arbitrary label (used by the verification suite to
/// give every check its own stream).
Rng make_stream(std::uint64_t master_seed, std::string_view label);

struct RunStreams {
  Rng trajectory;
  Rng subproblem;
  Rng interpolation;
  Rng evaluation;

  explicit RunStreams(std::uint64_t master_seed)
      : trajectory(make_stream(master_seed, Stream::kTrajectory)),
        subproblem(make_stream(master_seed, Stream::kSubproblem)),
        interpolation(make_stream(master_seed, Stream::kInterpolation)),
        evaluation(make_stream(master_seed, Stream::kEvaluation)) {}
};

}  // namespace npghm
