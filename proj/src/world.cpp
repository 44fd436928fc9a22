#include "diffopt/world.hpp"

#include <cmath>
#include <stdexcept>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

namespace diffopt {

namespace {

Mat haar_basis(int D, int d, Rng& rng) {
  Mat g(D, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < D; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(D, d);
  // Fix column signs so the factorization is unique (R has positive diagonal)
  // and the distribution of range(Q) is exactly Haar.
  Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

SubspaceWorld build(int D, int d, double penalty_coef, double label_noise,
                    std::uint64_t seed, const Mat& latent_cov) {
  if (d < 1 || d > D)
    throw std::invalid_argument("make_world: need 1 <= latent_dim <= ambient_dim");
  if (penalty_coef < 0.0)
    throw std::invalid_argument("make_world: penalty_coef must be >= 0");
  if (label_noise < 0.0)
    throw std::invalid_argument("make_world: label_noise must be >= 0");

  SubspaceWorld w;
  w.ambient_dim = D;
  w.latent_dim = d;
  w.penalty_coef = penalty_coef;
  w.label_noise = label_noise;
  w.pseudo_noise = 1.0 / std::sqrt(static_cast<double>(D));
  w.latent_cov = latent_cov;

  Rng rng(derive_seed(seed, 0x5747444cull));  // world stream
  w.basis = haar_basis(D, d, rng);

  Vec beta(d);
  do {
    for (int i = 0; i < d; ++i) beta[i] = rng.normal();
  } while (beta.norm() == 0.0);
  beta /= beta.norm();
  w.reward_dir = w.basis * beta;
  return w;
}

}  // namespace

SubspaceWorld make_world(int ambient_dim, int latent_dim, double penalty_coef,
                         double label_noise, std::uint64_t seed) {
  return build(ambient_dim, latent_dim, penalty_coef, label_noise, seed,
               Mat::Identity(latent_dim, latent_dim));
}

SubspaceWorld make_world(int ambient_dim, int latent_dim, double penalty_coef,
                         double label_noise, std::uint64_t seed,
                         const Vec& latent_var) {
  if (latent_var.size() != latent_dim)
    throw std::invalid_argument("make_world: latent_var size mismatch");
  for (int i = 0; i < latent_dim; ++i)
    if (!(latent_var[i] > 0.0) || latent_var[i] > 1.0)
      throw std::invalid_argument("make_world: latent variances must lie in (0, 1]");
  return build(ambient_dim, latent_dim, penalty_coef, label_noise, seed,
               Mat(latent_var.asDiagonal()));
}

SampleBatch sample_latent(const SubspaceWorld& world, int n,
                          std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample_latent: n must be >= 0");
  const int D = world.ambient_dim;
  const int d = world.latent_dim;

  SampleBatch batch;
  batch.points = RowMat::Zero(n, D);
  batch.latent = RowMat::Zero(n, d);
  if (n == 0) return batch;

  const Mat chol = Eigen::LLT<Mat>(world.latent_cov).matrixL();
  Rng rng(derive_seed(seed, 0x53414d50ull));  // sampling stream
  Vec g(d);
  for (int i = 0; i < n; ++i) {
    rng.fill_normal(g.data(), static_cast<std::size_t>(d));
    Vec z = chol * g;
    batch.latent.row(i) = z.transpose();
    double* x = batch.points.row(i).data();
    for (int j = 0; j < d; ++j)
      kern::axpy(z[j], world.basis.col(j).data(), x,
                 static_cast<std::size_t>(D));
  }
  return batch;
}

std::pair<Vec, Vec> project(const SubspaceWorld& world, const Vec& x) {
  Vec x_par = world.basis * (world.basis.transpose() * x);
  Vec x_perp = x - x_par;
  return {std::move(x_par), std::move(x_perp)};
}

double true_reward(const SubspaceWorld& world, const Vec& x) {
  auto [x_par, x_perp] = project(world, x);
  return world.reward_dir.dot(x_par) -
         world.penalty_coef * x_perp.squaredNorm();
}

Vec true_reward_batch(const SubspaceWorld& world, const RowMat& points) {
  const int n = static_cast<int>(points.rows());
  const auto D = static_cast<std::size_t>(world.ambient_dim);
  const int d = world.latent_dim;
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double* x = points.row(i).data();
    // |x_perp|^2 = |x|^2 - |A^T x|^2; theta lies in the subspace so
    // theta^T x_par = theta^T x.
    double par_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double u = kern::dot(world.basis.col(j).data(), x, D);
      par_sq += u * u;
    }
    const double perp_sq = std::max(0.0, kern::sum_sq(x, D) - par_sq);
    out[i] = kern::dot(world.reward_dir.data(), x, D) -
             world.penalty_coef * perp_sq;
  }
  return out;
}

Vec off_support_norms(const SubspaceWorld& world, const RowMat& points) {
  const int n = static_cast<int>(points.rows());
  const auto D = static_cast<std::size_t>(world.ambient_dim);
  const int d = world.latent_dim;
  // Full-dimensional worlds have a zero orthogonal projector.
  if (d == world.ambient_dim) return Vec::Zero(n);
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double* x = points.row(i).data();
    double par_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double u = kern::dot(world.basis.col(j).data(), x, D);
      par_sq += u * u;
    }
    out[i] = std::sqrt(std::max(0.0, kern::sum_sq(x, D) - par_sq));
  }
  return out;
}

}  // namespace diffopt
