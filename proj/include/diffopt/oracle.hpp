#pragma once

#include <cstdint>

#include "diffopt/schedule.hpp"
#include "diffopt/score_api.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

struct GaussianDist {
  Vec mean;
  Mat cov;
};

// Closed-form conditional score and conditional laws under Gaussian design.
// The conditioning convention is y = beta^T z + xi with xi ~ N(0, nu^2),
// where beta = A^T theta for the reward vector theta in use; the same object
// therefore serves both the idealized case (theta = true reward direction)
// and the pipeline case (theta = fitted estimate).
//
// Score closed form, for t > 0:
//   s(x, y, t) = (alpha/h) A B_t (alpha A^T x + (h/nu^2) y beta) - x / h,
//   B_t = (alpha^2 I + (h/nu^2) beta beta^T + h Sigma^{-1})^{-1}.
class OracleScore : public ConditionalScore {
 public:
  OracleScore(const SubspaceWorld& world, const Vec& theta, double nu);

  // Convenience: conditions on the true reward direction with the world's
  // pseudo-noise level.
  explicit OracleScore(const SubspaceWorld& world);

  void score_batch(const RowMat& points, double y, double t,
                   RowMat& out) const override;

  // z | y = a. Requires nu > 0 or beta^T Sigma beta > 0.
  GaussianDist posterior_latent(double a) const;

  // E |z|^2 under the posterior: quadratic in a plus the posterior trace.
  double m_of_a(double a) const;

  // Law of x at forward time t given y = a:
  // N(alpha(t) A mu(a), alpha(t)^2 A Gamma A^T + h(t) I_D).
  GaussianDist conditional_law_at(double a, double t) const;

  // Uncentered second moment E[x x^T] = A (Gamma + mu mu^T) A^T of the
  // noiseless conditional.
  Mat target_cov(double a) const;

  // Exact draws from z | y = a mapped through the basis (on-support).
  RowMat sample_posterior(double a, int n, std::uint64_t seed) const;

  // Same draws pushed through the forward process to time t0 (adds the
  // full-dimensional h(t0) noise).
  RowMat sample_conditional_at(double a, double t, int n,
                               std::uint64_t seed) const;

  Mat b_matrix(double t) const;

  const Vec& beta() const { return beta_; }
  double nu() const { return nu_; }
  int ambient_dim() const override { return static_cast<int>(basis_.rows()); }
  int latent_dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& latent_cov() const { return sigma_; }

 private:
  Mat basis_;      // D x d
  Mat sigma_;      // d x d
  Mat sigma_inv_;  // d x d
  Vec beta_;       // d
  double nu_;
};

}  // namespace diffopt
