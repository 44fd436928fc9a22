#pragma once

#include <cstdint>

#include "diffopt/datasets.hpp"
#include "diffopt/oracle.hpp"
#include "diffopt/reward.hpp"
#include "diffopt/sampler.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

// One evaluation row per (target value, seed). Column order in CSV/JSON
// output follows the field order here. E3_est is reported as the magnitude
// of the (nonpositive) off-support penalty term.
struct EvalReport {
  double target_a = 0.0;
  double mean_reward = 0.0;
  double suboptimality = 0.0;  // target_a - mean_reward
  double E1_est = 0.0;
  double E2_est = 0.0;
  double E3_est = 0.0;
  double subspace_angle = 0.0;
  double off_support_dev = 0.0;
  double shift_trace_ridge = 0.0;
  double shift_trace_pref = 0.0;
  double m_of_a = 0.0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  std::uint64_t seed = 0;
};

double mean_true_reward(const RowMat& points, const SubspaceWorld& world);

// target - E[f(x)] over the generated rows.
double suboptimality(const GenerationRun& run, const SubspaceWorld& world,
                     double a);

// |V V^T - A A^T|_F^2 for column-orthonormal V, A; range [0, 2d].
double subspace_angle(const Mat& v, const Mat& a);

struct Decomposition {
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double se1 = 0.0, se2 = 0.0, se3 = 0.0;  // Monte-Carlo standard errors
};

// Three-term error split of the sub-optimality against exact conditional
// samples (posterior draws mapped through the basis, noised to t0):
//   e1: mean |f_hat - g| on the exact conditional,
//   e2: |E g(x_par) exact - E g(x_par) generated|,
//   e3: magnitude of the mean off-support penalty of the generated rows.
// e1 + e2 + e3 upper-bounds the sub-optimality up to Monte-Carlo error.
Decomposition decompose(const GenerationRun& run, const SubspaceWorld& world,
                        const LinearRewardEstimate& estimate,
                        const OracleScore& oracle, int n_ref,
                        std::uint64_t seed);

// Tr(design^{-1} target) via an SPD solve.
double shift_trace(const Mat& design, const Mat& target_cov);

// (X^T X + lambda I) / n2 from a labeled set.
Mat ridge_design_cov(const LabeledSet& data, double lambda);

// (sum_i (x1_i - x2_i)(x1_i - x2_i)^T + lambda I) / n2 from preferences.
Mat pref_design_cov(const PreferenceSet& data, double lambda);

double shift_trace_ridge(const LabeledSet& data, double lambda,
                         const Mat& target_cov);

double shift_trace_pref(const PreferenceSet& data, double lambda,
                        const Mat& target_cov);

// Second-moment shift ratio sqrt(M(a) / trace(Sigma)) of the conditioned
// latent against the unconditioned one.
double distro_shift_estimate(const OracleScore& oracle, double a);

}  // namespace diffopt
