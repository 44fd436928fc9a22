#pragma once

// Independent reference for the conditional score: condition the joint
// Gaussian of (x_t, y) directly in ambient dimension, with no shared code
// path with OracleScore. x_t = alpha A z + sqrt(h) eps and y = beta^T z +
// nu xi give
//   Cov(x_t)    = alpha^2 A Sigma A^T + h I,
//   Cov(x_t, y) = alpha A Sigma beta,
//   Var(y)      = beta^T Sigma beta + nu^2,
// so x_t | y is Gaussian and its score at x is -C^{-1} (x - m(y)).

#include <cmath>

#include "diffopt/schedule.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt::testref {

struct DirectConditional {
  Vec mean;
  Mat cov;

  DirectConditional(const SubspaceWorld& world, const Vec& theta, double nu,
                    double y, double t) {
    const double al = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    const int D = world.ambient_dim;
    const Vec beta = world.basis.transpose() * theta;
    const Vec cxy = al * (world.basis * (world.latent_cov * beta));
    const double vy = beta.dot(world.latent_cov * beta) + nu * nu;
    const Mat cx =
        (al * al) *
            (world.basis * world.latent_cov * world.basis.transpose()) +
        h * Mat::Identity(D, D);
    mean = cxy * (y / vy);
    cov = cx - cxy * cxy.transpose() / vy;
  }

  Vec score(const Vec& x) const {
    return -Eigen::LLT<Mat>(cov).solve(x - mean);
  }

  double log_density(const Vec& x) const {
    Eigen::LLT<Mat> llt(cov);
    const Vec r = x - mean;
    const double quad = r.dot(llt.solve(r));
    double logdet = 0.0;
    const Mat l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i)
      logdet += 2.0 * std::log(l(i, i));
    const double d = static_cast<double>(x.size());
    return -0.5 *
           (quad + logdet + d * std::log(2.0 * 3.14159265358979323846));
  }
};

}  // namespace diffopt::testref
