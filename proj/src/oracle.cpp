#include "diffopt/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

namespace diffopt {

OracleScore::OracleScore(const SubspaceWorld& world, const Vec& theta,
                         double nu)
    : basis_(world.basis),
      sigma_(world.latent_cov),
      beta_(world.basis.transpose() * theta),
      nu_(nu) {
  if (nu < 0.0) throw std::invalid_argument("OracleScore: nu must be >= 0");
  Eigen::LLT<Mat> llt(sigma_);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("OracleScore: latent covariance must be SPD");
  sigma_inv_ = llt.solve(Mat::Identity(sigma_.rows(), sigma_.cols()));
}

OracleScore::OracleScore(const SubspaceWorld& world)
    : OracleScore(world, world.reward_dir, world.pseudo_noise) {}

Mat OracleScore::b_matrix(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("OracleScore: need t > 0");
  if (!(nu_ > 0.0))
    throw std::invalid_argument("OracleScore: the score requires nu > 0");
  const double a = DiffusionSchedule::alpha(t);
  const double h = DiffusionSchedule::h(t);
  const int d = latent_dim();
  Mat precision = (a * a) * Mat::Identity(d, d) + h * sigma_inv_ +
                  (h / (nu_ * nu_)) * (beta_ * beta_.transpose());
  return Eigen::LLT<Mat>(precision).solve(Mat::Identity(d, d));
}

void OracleScore::score_batch(const RowMat& points, double y, double t,
                              RowMat& out) const {
  if (!(t > 0.0))
    throw std::invalid_argument("OracleScore: score is singular at t <= 0");
  if (!(nu_ > 0.0))
    throw std::invalid_argument("OracleScore: the score requires nu > 0");
  const int D = ambient_dim();
  const int d = latent_dim();
  const auto n = points.rows();
  if (out.rows() != n || out.cols() != D) out.resize(n, D);

  const double a = DiffusionSchedule::alpha(t);
  const double h = DiffusionSchedule::h(t);
  const double cy = h / (nu_ * nu_);

  Mat precision = (a * a) * Mat::Identity(d, d) + h * sigma_inv_ +
                  cy * (beta_ * beta_.transpose());
  Eigen::LLT<Mat> llt(precision);

  Vec m(d), w(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* x = points.row(i).data();
    for (int j = 0; j < d; ++j)
      m[j] = a * kern::dot(basis_.col(j).data(), x,
                           static_cast<std::size_t>(D));
    m += (cy * y) * beta_;
    w = llt.solve(m);

    double* s = out.row(i).data();
    for (int k = 0; k < D; ++k) s[k] = -x[k] / h;
    for (int j = 0; j < d; ++j)
      kern::axpy((a / h) * w[j], basis_.col(j).data(), s,
                 static_cast<std::size_t>(D));
  }
}

GaussianDist OracleScore::posterior_latent(double a) const {
  const double s = beta_.dot(sigma_ * beta_);
  const double denom = s + nu_ * nu_;
  if (!(denom > 0.0))
    throw std::invalid_argument(
        "posterior_latent: degenerate conditioning (nu = 0 and beta = 0)");
  const Vec sig_beta = sigma_ * beta_;
  GaussianDist dist;
  dist.mean = sig_beta * (a / denom);
  dist.cov = sigma_ - sig_beta * sig_beta.transpose() / denom;
  dist.cov = 0.5 * (dist.cov + dist.cov.transpose());
  return dist;
}

double OracleScore::m_of_a(double a) const {
  const double s = beta_.dot(sigma_ * beta_);
  const double denom = s + nu_ * nu_;
  if (!(denom > 0.0))
    throw std::invalid_argument(
        "m_of_a: degenerate conditioning (nu = 0 and beta = 0)");
  const Vec sig_beta = sigma_ * beta_;
  const double quad = sig_beta.squaredNorm() / (denom * denom);
  const double trace = sigma_.trace() - sig_beta.squaredNorm() / denom;
  return quad * a * a + trace;
}

GaussianDist OracleScore::conditional_law_at(double a, double t) const {
  const GaussianDist post = posterior_latent(a);
  const double al = DiffusionSchedule::alpha(t);
  const double h = DiffusionSchedule::h(t);
  const int D = ambient_dim();
  GaussianDist law;
  law.mean = al * (basis_ * post.mean);
  law.cov = (al * al) * (basis_ * post.cov * basis_.transpose()) +
            h * Mat::Identity(D, D);
  return law;
}

Mat OracleScore::target_cov(double a) const {
  const GaussianDist post = posterior_latent(a);
  return basis_ * (post.cov + post.mean * post.mean.transpose()) *
         basis_.transpose();
}

namespace {

// PSD square root factor via eigendecomposition; the posterior covariance is
// exactly singular when nu = 0.
Mat psd_factor(const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal();
}

}  // namespace

RowMat OracleScore::sample_posterior(double a, int n,
                                     std::uint64_t seed) const {
  const GaussianDist post = posterior_latent(a);
  const int D = ambient_dim();
  const int d = latent_dim();
  const Mat factor = psd_factor(post.cov);
  Rng rng(derive_seed(seed, 0x504f5354ull));
  RowMat out = RowMat::Zero(n, D);
  Vec g(d);
  for (int i = 0; i < n; ++i) {
    rng.fill_normal(g.data(), static_cast<std::size_t>(d));
    const Vec z = post.mean + factor * g;
    double* x = out.row(i).data();
    for (int j = 0; j < d; ++j)
      kern::axpy(z[j], basis_.col(j).data(), x, static_cast<std::size_t>(D));
  }
  return out;
}

RowMat OracleScore::sample_conditional_at(double a, double t, int n,
                                          std::uint64_t seed) const {
  if (!(t >= 0.0))
    throw std::invalid_argument("sample_conditional_at: need t >= 0");
  RowMat out = sample_posterior(a, n, seed);
  const double al = DiffusionSchedule::alpha(t);
  const double sh = std::sqrt(DiffusionSchedule::h(t));
  const int D = ambient_dim();
  Rng rng(derive_seed(seed, 0x4e4f4953ull));
  for (int i = 0; i < n; ++i) {
    double* x = out.row(i).data();
    for (int k = 0; k < D; ++k) x[k] = al * x[k] + sh * rng.normal();
  }
  return out;
}

}  // namespace diffopt
