#pragma once

#include <cstdint>
#include <string>

#include "diffopt/schedule.hpp"
#include "diffopt/score_api.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

enum class Integrator {
  // Exact solution of the backward SDE with the score frozen per interval:
  //   x <- e^(dt/2) x + 2 (e^(dt/2) - 1) s + sqrt(e^dt - 1) eps.
  Exponential,
  // Plain Euler-Maruyama, kept for discretization ablations.
  Euler,
};

struct GenerateOptions {
  Integrator integrator = Integrator::Exponential;
};

struct GenerationRun {
  std::string source;  // "oracle" or "learned"
  double target = 0.0;
  DiffusionSchedule sched;
  std::uint64_t seed = 0;
  RowMat samples;  // n x D
};

// Integrates the discretized backward SDE from N(0, I_D) at backward time 0
// down to forward time t0, conditioning the score on y = a throughout. Rows
// evolve under independent RNG substreams derived from (seed, row), so the
// output is reproducible bit-for-bit and independent of batching.
GenerationRun generate(const ConditionalScore& score, const std::string& source,
                       double a, int n, const DiffusionSchedule& sched,
                       std::uint64_t seed, const GenerateOptions& opts = {});

// Mean of |(I - AA^T) x| over the generated rows.
double off_support_deviation(const GenerationRun& run,
                             const SubspaceWorld& world);

}  // namespace diffopt
