#include "diffopt/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

namespace diffopt {

GenerationRun generate(const ConditionalScore& score, const std::string& source,
                       double a, int n, const DiffusionSchedule& sched,
                       std::uint64_t seed, const GenerateOptions& opts) {
  if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
  const int D = score.ambient_dim();

  GenerationRun run;
  run.source = source;
  run.target = a;
  run.sched = sched;
  run.seed = seed;
  run.samples.resize(n, D);
  if (n == 0) return run;

  // Backward time grid: full steps of eta from T down to t0, plus a shorter
  // final step when eta does not divide T - t0.
  std::vector<double> steps;
  {
    double remaining = sched.terminal - sched.early_stop;
    while (remaining > sched.step * (1.0 + 1e-9)) {
      steps.push_back(sched.step);
      remaining -= sched.step;
    }
    if (remaining > 1e-12) steps.push_back(remaining);
  }

  // One substream per row; noise consumption is independent of batching.
  std::vector<Rng> row_rng;
  row_rng.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    row_rng.emplace_back(derive_seed(seed, 0x524f5753ull,
                                     static_cast<std::uint64_t>(i)));

  RowMat& x = run.samples;
  for (int i = 0; i < n; ++i)
    row_rng[static_cast<std::size_t>(i)].fill_normal(
        x.row(i).data(), static_cast<std::size_t>(D));

  RowMat s(n, D);
  Vec noise(D);
  double elapsed = 0.0;
  const auto nD = static_cast<std::size_t>(D);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double dt = steps[k];
    const double t_fwd = sched.terminal - elapsed;  // score frozen here
    score.score_batch(x, a, t_fwd, s);

    double cx, cs, ce;
    if (opts.integrator == Integrator::Exponential) {
      const double g = std::exp(0.5 * dt);
      cx = g;
      cs = 2.0 * (g - 1.0);
      ce = std::sqrt(std::expm1(dt));
    } else {
      cx = 1.0 + 0.5 * dt;
      cs = dt;
      ce = std::sqrt(dt);
    }

    double state_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      auto& rng = row_rng[static_cast<std::size_t>(i)];
      rng.fill_normal(noise.data(), nD);
      double* row = x.row(i).data();
      kern::ou_step(cx, cs, s.row(i).data(), ce, noise.data(), row, nD);
      state_sq += kern::sum_sq(row, nD);
    }
    if (!std::isfinite(state_sq))
      throw std::runtime_error("generate: non-finite state at step " +
                               std::to_string(k));
    elapsed += dt;
  }
  return run;
}

double off_support_deviation(const GenerationRun& run,
                             const SubspaceWorld& world) {
  if (run.samples.rows() == 0) return 0.0;
  return off_support_norms(world, run.samples).mean();
}

}  // namespace diffopt
