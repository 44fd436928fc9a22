#include "diffopt/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

namespace diffopt {

double mean_true_reward(const RowMat& points, const SubspaceWorld& world) {
  if (points.rows() == 0) return 0.0;
  return true_reward_batch(world, points).mean();
}

double suboptimality(const GenerationRun& run, const SubspaceWorld& world,
                     double a) {
  return a - mean_true_reward(run.samples, world);
}

double subspace_angle(const Mat& v, const Mat& a) {
  if (v.rows() != a.rows() || v.cols() != a.cols())
    throw std::invalid_argument("subspace_angle: shape mismatch");
  const int d = static_cast<int>(v.cols());
  const auto check = [d](const Mat& m, const char* name) {
    const double err =
        (m.transpose() * m - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
    if (err > 1e-8)
      throw std::invalid_argument(std::string("subspace_angle: ") + name +
                                  " does not have orthonormal columns");
  };
  check(v, "V");
  check(a, "A");
  return (v * v.transpose() - a * a.transpose()).squaredNorm();
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const Vec& values) {
  const auto n = values.size();
  MeanSe out;
  if (n == 0) return out;
  out.mean = values.mean();
  if (n > 1) {
    const double var =
        (values.array() - out.mean).square().sum() / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

// g(x) = theta^T x_par per row.
Vec on_support_reward(const SubspaceWorld& world, const RowMat& points) {
  const auto n = points.rows();
  const auto D = static_cast<std::size_t>(world.ambient_dim);
  Vec out(n);
  // theta lies in the subspace, so theta^T x_par = theta^T x.
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = kern::dot(world.reward_dir.data(), points.row(i).data(), D);
  return out;
}

}  // namespace

Decomposition decompose(const GenerationRun& run, const SubspaceWorld& world,
                        const LinearRewardEstimate& estimate,
                        const OracleScore& oracle, int n_ref,
                        std::uint64_t seed) {
  if (n_ref < 2) throw std::invalid_argument("decompose: n_ref must be >= 2");
  const RowMat ref = oracle.sample_conditional_at(
      run.target, run.sched.early_stop, n_ref, derive_seed(seed, 0x44454331ull));
  const auto D = static_cast<std::size_t>(world.ambient_dim);

  // e1: reward-model error on the exact conditional.
  Vec abs_err(n_ref);
  const Vec delta = estimate.theta_hat;
  for (int i = 0; i < n_ref; ++i) {
    const double fhat = kern::dot(delta.data(), ref.row(i).data(), D);
    const double g = kern::dot(world.reward_dir.data(), ref.row(i).data(), D);
    abs_err[i] = std::abs(fhat - g);
  }
  const MeanSe e1 = mean_se(abs_err);

  // e2: on-support reward gap between exact conditional and generated rows.
  const MeanSe g_ref = mean_se(on_support_reward(world, ref));
  const MeanSe g_run = mean_se(on_support_reward(world, run.samples));

  // e3: off-support penalty magnitude of the generated rows.
  const Vec off = off_support_norms(world, run.samples);
  Vec penalty(off.size());
  for (Eigen::Index i = 0; i < off.size(); ++i)
    penalty[i] = world.penalty_coef * off[i] * off[i];
  const MeanSe e3 = mean_se(penalty);

  Decomposition out;
  out.e1 = e1.mean;
  out.se1 = e1.se;
  out.e2 = std::abs(g_ref.mean - g_run.mean);
  out.se2 = g_ref.se + g_run.se;
  out.e3 = e3.mean;
  out.se3 = e3.se;
  return out;
}

double shift_trace(const Mat& design, const Mat& target_cov) {
  Eigen::LLT<Mat> llt(design);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("shift_trace: design matrix must be SPD");
  return llt.solve(target_cov).trace();
}

Mat ridge_design_cov(const LabeledSet& data, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ridge_design_cov: lambda must be > 0");
  const auto n = data.points.rows();
  if (n == 0) throw std::invalid_argument("ridge_design_cov: empty data");
  Mat out = data.points.transpose() * data.points;
  out.diagonal().array() += lambda;
  return out / static_cast<double>(n);
}

Mat pref_design_cov(const PreferenceSet& data, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("pref_design_cov: lambda must be > 0");
  const auto n = data.size();
  if (n == 0) throw std::invalid_argument("pref_design_cov: empty data");
  const RowMat diff = data.first - data.second;
  Mat out = diff.transpose() * diff;
  out.diagonal().array() += lambda;
  return out / static_cast<double>(n);
}

double shift_trace_ridge(const LabeledSet& data, double lambda,
                         const Mat& target_cov) {
  return shift_trace(ridge_design_cov(data, lambda), target_cov);
}

double shift_trace_pref(const PreferenceSet& data, double lambda,
                        const Mat& target_cov) {
  return shift_trace(pref_design_cov(data, lambda), target_cov);
}

double distro_shift_estimate(const OracleScore& oracle, double a) {
  return std::sqrt(oracle.m_of_a(a) / oracle.latent_cov().trace());
}

}  // namespace diffopt
