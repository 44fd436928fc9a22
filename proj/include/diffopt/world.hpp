#pragma once

#include <cstdint>
#include <utility>

#include "diffopt/types.hpp"

namespace diffopt {

// Ground-truth environment: an orthonormal embedding A of a d-dimensional
// Gaussian latent into ambient dimension D, plus a reward that is linear on
// the subspace and quadratically penalized off it,
//
//   f(x) = theta^T x_par - penalty_coef * |x_perp|^2.
//
// Instances are immutable after construction and safe to share across
// threads; all sampling takes an explicit seed.
struct SubspaceWorld {
  int ambient_dim = 0;                // D
  int latent_dim = 0;                 // d
  Mat basis;                          // D x d, orthonormal columns
  Mat latent_cov;                     // d x d, SPD, eigenvalues in (0, 1]
  Vec reward_dir;                     // theta = basis * beta, |theta| = 1
  double penalty_coef = 0.0;          // >= 0
  double label_noise = 0.0;           // sigma
  double pseudo_noise = 0.0;          // nu, defaults to 1/sqrt(D)

  Vec beta() const { return basis.transpose() * reward_dir; }
};

// Draws A as the Q-factor of a seeded Gaussian matrix (Haar-distributed
// range) and the reward direction uniformly on the unit sphere of the
// subspace. latent_cov defaults to the identity.
SubspaceWorld make_world(int ambient_dim, int latent_dim, double penalty_coef,
                         double label_noise, std::uint64_t seed);

// Same, with a diagonal latent covariance (entries must lie in (0, 1]).
SubspaceWorld make_world(int ambient_dim, int latent_dim, double penalty_coef,
                         double label_noise, std::uint64_t seed,
                         const Vec& latent_var);

struct SampleBatch {
  RowMat points;  // n x D
  RowMat latent;  // n x d
};

// n i.i.d. draws of z ~ N(0, latent_cov) mapped through the basis.
SampleBatch sample_latent(const SubspaceWorld& world, int n,
                          std::uint64_t seed);

// Splits x into its subspace projection and orthogonal complement.
std::pair<Vec, Vec> project(const SubspaceWorld& world, const Vec& x);

double true_reward(const SubspaceWorld& world, const Vec& x);

// Row-wise true rewards of a sample matrix.
Vec true_reward_batch(const SubspaceWorld& world, const RowMat& points);

// |(I - AA^T) x| per row.
Vec off_support_norms(const SubspaceWorld& world, const RowMat& points);

}  // namespace diffopt
