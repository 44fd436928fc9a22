#include "diffopt/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "diffopt/kernels.hpp"

namespace diffopt {

LinearRewardEstimate fit_ridge(const LabeledSet& data, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
  const int D = static_cast<int>(data.points.cols());
  const Mat X = data.points;
  Mat gram = X.transpose() * X;
  gram.diagonal().array() += lambda;
  const Vec rhs = X.transpose() * data.labels;

  Vec theta;
  if (lambda > 0.0) {
    theta = Eigen::LLT<Mat>(gram).solve(rhs);
  } else {
    Eigen::LDLT<Mat> ldlt(gram);
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff()))
      throw std::runtime_error("fit_ridge: ill-posed fit (singular system with lambda = 0)");
    theta = ldlt.solve(rhs);
  }

  const double rel_residual =
      (gram * theta - rhs).norm() / std::max(rhs.norm(), 1e-300);
  if (rel_residual > 1e-8)
    throw std::runtime_error("fit_ridge: normal-equation residual above 1e-8");

  LinearRewardEstimate est;
  est.theta_hat = std::move(theta);
  est.mode = RewardFitMode::Ridge;
  est.lambda = lambda;
  est.final_loss = (X * est.theta_hat - data.labels).squaredNorm() +
                   lambda * est.theta_hat.squaredNorm();
  est.iterations = 1;
  est.converged = true;
  (void)D;
  return est;
}

namespace {

// -log p(winner) = log(1 + exp(-(r_win - r_lose))), stable for any gap.
double choice_nll(double gap) {
  return gap > 0.0 ? std::log1p(std::exp(-gap))
                   : -gap + std::log1p(std::exp(gap));
}

// Loss and gradient share the per-pair reward evaluations; the optimizer
// calls this fused form once per candidate point.
struct BtEval {
  double loss = 0.0;
  Vec grad;
};

BtEval bt_eval(const PreferenceSet& data, const Vec& theta, bool with_grad) {
  const auto n = data.size();
  BtEval out;
  out.grad = Vec::Zero(theta.size());
  if (n == 0) return out;
  const Vec r1 = data.first * theta;
  const Vec r2 = data.second * theta;
  Vec c1(n), c2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gap = data.winner[i] == 0 ? r1[i] - r2[i] : r2[i] - r1[i];
    out.loss += choice_nll(gap);
    if (with_grad) {
      // gradient of -log p(u) is p1 x1 + p2 x2 - u
      const double p1 = bt_prob_from_rewards(r1[i], r2[i]);
      c1[i] = p1 - (data.winner[i] == 0 ? 1.0 : 0.0);
      c2[i] = (1.0 - p1) - (data.winner[i] == 1 ? 1.0 : 0.0);
    }
  }
  out.loss /= static_cast<double>(n);
  if (with_grad)
    out.grad = (data.first.transpose() * c1 + data.second.transpose() * c2) /
               static_cast<double>(n);
  return out;
}

}  // namespace

double bt_neg_log_likelihood(const PreferenceSet& data, const Vec& theta) {
  return bt_eval(data, theta, false).loss;
}

Vec bt_nll_gradient(const PreferenceSet& data, const Vec& theta) {
  return bt_eval(data, theta, true).grad;
}

Vec project_to_constraint(Vec theta) {
  theta.array() -= theta.mean();
  const double norm = theta.norm();
  if (norm > 1.0) theta /= norm;
  return theta;
}

LinearRewardEstimate fit_bt_mle(const PreferenceSet& data,
                                const BtFitOptions& opts) {
  if (data.size() == 0)
    throw std::invalid_argument("fit_bt_mle: data must be nonempty");
  const auto D = data.first.cols();

  Vec theta = Vec::Zero(D);
  double loss = bt_neg_log_likelihood(data, theta);
  int iter = 0;
  bool converged = false;
  double step = opts.step;

  for (; iter < opts.max_iters; ++iter) {
    const Vec grad = bt_eval(data, theta, true).grad;
    const Vec moved = project_to_constraint(theta - opts.step * grad);
    if ((theta - moved).norm() / opts.step <= opts.tol) {
      converged = true;
      break;
    }

    // Armijo backtracking on the projected step; the accepted step carries
    // over and is allowed to grow again.
    step = std::min(2.0 * step, opts.step);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec trial = project_to_constraint(theta - step * grad);
      const double trial_loss = bt_neg_log_likelihood(data, trial);
      const double decrease = (trial - theta).squaredNorm() / step;
      if (trial_loss <= loss - 1e-4 * decrease) {
        theta = trial;
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;  // step collapsed: stationary to machine precision
      break;
    }
  }

  LinearRewardEstimate est;
  est.theta_hat = std::move(theta);
  est.mode = RewardFitMode::BtMle;
  est.lambda = 0.0;
  est.final_loss = loss;
  est.iterations = iter;
  est.converged = converged;
  return est;
}

double bandit_regret_estimate(const LinearRewardEstimate& estimate,
                              const RowMat& target_samples,
                              const SubspaceWorld& world) {
  const auto n = target_samples.rows();
  if (n == 0) return 0.0;
  const auto D = static_cast<std::size_t>(target_samples.cols());
  const Vec delta = estimate.theta_hat - world.reward_dir;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += std::abs(kern::dot(delta.data(), target_samples.row(i).data(), D));
  return acc / static_cast<double>(n);
}

}  // namespace diffopt
