#pragma once

#include "diffopt/datasets.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

enum class RewardFitMode { Ridge, BtMle };

struct LinearRewardEstimate {
  Vec theta_hat;
  RewardFitMode mode = RewardFitMode::Ridge;
  double lambda = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  bool converged = true;

  double predict(Eigen::Ref<const Vec> x) const { return theta_hat.dot(x); }
  RewardFn predictor() const {
    Vec th = theta_hat;
    return [th](Eigen::Ref<const Vec> x) { return th.dot(x); };
  }
  Vec beta_hat(const SubspaceWorld& world) const {
    return world.basis.transpose() * theta_hat;
  }
};

// theta = (X^T X + lambda I)^{-1} X^T y via an SPD solve. lambda == 0 is
// accepted only when the Gram matrix is nonsingular; otherwise the fit is
// reported as ill-posed.
LinearRewardEstimate fit_ridge(const LabeledSet& data, double lambda);

// Average negative log-likelihood of the observed choices under the
// Bradley-Terry model with reward theta^T x, log-sum-exp stabilized.
double bt_neg_log_likelihood(const PreferenceSet& data, const Vec& theta);

Vec bt_nll_gradient(const PreferenceSet& data, const Vec& theta);

// Euclidean projection onto {sum_i theta_i = 0} intersected with the unit
// ball: subtract the coordinate mean, then clip the norm. Both sets contain
// the origin, so this composition is the exact projection.
Vec project_to_constraint(Vec theta);

struct BtFitOptions {
  int max_iters = 10000;
  double step = 1.0;
  double tol = 1e-8;
};

// Projected gradient descent with Armijo backtracking; the objective is
// convex, so the result is within tolerance of the constrained optimum.
LinearRewardEstimate fit_bt_mle(const PreferenceSet& data,
                                const BtFitOptions& opts = {});

// Monte-Carlo average of |theta_hat^T x - theta^T x| over the given samples.
double bandit_regret_estimate(const LinearRewardEstimate& estimate,
                              const RowMat& target_samples,
                              const SubspaceWorld& world);

}  // namespace diffopt
