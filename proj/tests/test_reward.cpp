#include <doctest.h>

#include <cmath>

#include "diffopt/reward.hpp"
#include "diffopt/rng.hpp"

using namespace diffopt;

TEST_CASE("ridge on a single observation") {
  LabeledSet data;
  data.points = RowMat::Zero(1, 2);
  data.points(0, 0) = 1.0;
  data.labels = Vec::Constant(1, 2.0);
  const auto est = fit_ridge(data, 1.0);
  CHECK(est.theta_hat[0] == doctest::Approx(1.0));
  CHECK(est.theta_hat[1] == doctest::Approx(0.0));
}

TEST_CASE("noiseless interpolation with full column rank") {
  Rng rng(3);
  const int n = 50, D = 6;
  RowMat x(n, D);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < D; ++j) x(i, j) = rng.normal();
  Vec theta(D);
  for (int j = 0; j < D; ++j) theta[j] = rng.normal();
  LabeledSet data{x, x * theta};
  const auto est = fit_ridge(data, 0.0);
  CHECK((est.theta_hat - theta).norm() < 1e-8);
}

TEST_CASE("singular lambda-free system is reported as ill-posed") {
  LabeledSet data;
  data.points = RowMat::Zero(2, 3);  // rank deficient
  data.points(0, 0) = 1.0;
  data.points(1, 0) = 2.0;
  data.labels = Vec::Ones(2);
  CHECK_THROWS_AS(fit_ridge(data, 0.0), std::runtime_error);
}

TEST_CASE("ridge first-order optimality") {
  SubspaceWorld w = make_world(8, 3, 5.0, 0.1, 31);
  const LabeledSet data = make_labeled(w, 200, 5);
  const auto est = fit_ridge(data, 1.0);
  const auto objective = [&](const Vec& th) {
    return (data.points * th - data.labels).squaredNorm() +
           1.0 * th.squaredNorm();
  };
  const double at_opt = objective(est.theta_hat);
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    Vec delta(8);
    for (int i = 0; i < 8; ++i) delta[i] = rng.normal();
    delta *= 1e-3 / delta.norm();
    CHECK(objective(est.theta_hat + delta) > at_opt);
  }
}

TEST_CASE("ridge error shrinks with sample size") {
  // Trend oracle over 10 seeds at n2 = 256 vs 4096.
  SubspaceWorld w = make_world(16, 4, 5.0, 0.1, 57);
  int improved = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto small = fit_ridge(make_labeled(w, 256, 100 + s), 1.0);
    const auto large = fit_ridge(make_labeled(w, 4096, 200 + s), 1.0);
    const double err_small = (small.theta_hat - w.reward_dir).norm();
    const double err_large = (large.theta_hat - w.reward_dir).norm();
    if (err_large < err_small) ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("bt objective reference values") {
  SubspaceWorld w = make_world(6, 2, 5.0, 0.0, 23);
  const PreferenceSet set = make_preferences(w, 64, 3);
  const Vec zero = Vec::Zero(6);
  CHECK(bt_neg_log_likelihood(set, zero) == doctest::Approx(std::log(2.0)));

  // Single pair with a log 3 reward gap, winner on the heavy side.
  PreferenceSet one;
  one.first = RowMat::Zero(1, 2);
  one.second = RowMat::Zero(1, 2);
  one.first(0, 0) = 1.0;
  one.winner.resize(1);
  one.winner[0] = 0;
  Vec theta(2);
  theta << std::log(3.0), 0.0;
  CHECK(bt_neg_log_likelihood(one, theta) ==
        doctest::Approx(-std::log(0.75)));
}

TEST_CASE("bt gradient matches central finite differences") {
  SubspaceWorld w = make_world(5, 2, 5.0, 0.0, 41);
  const PreferenceSet set = make_preferences(w, 128, 7);
  Rng rng(15);
  Vec theta(5);
  for (int i = 0; i < 5; ++i) theta[i] = 0.4 * rng.normal();

  const Vec grad = bt_nll_gradient(set, theta);
  const double step = 1e-5;
  for (int i = 0; i < 5; ++i) {
    Vec up = theta, dn = theta;
    up[i] += step;
    dn[i] -= step;
    const double fd = (bt_neg_log_likelihood(set, up) -
                       bt_neg_log_likelihood(set, dn)) /
                      (2.0 * step);
    CHECK(std::abs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("bt likelihood ignores directions orthogonal to the differences") {
  SubspaceWorld w = make_world(6, 2, 5.0, 0.0, 47);
  const PreferenceSet set = make_preferences(w, 64, 9);
  // Differences live on the subspace, so any off-support shift is invisible.
  Vec off = Vec::Zero(6);
  off[5] = 1.0;
  off = off - w.basis * (w.basis.transpose() * off);
  Rng rng(21);
  Vec theta(6);
  for (int i = 0; i < 6; ++i) theta[i] = 0.3 * rng.normal();
  const double base = bt_neg_log_likelihood(set, theta);
  const double shifted = bt_neg_log_likelihood(set, theta + 2.0 * off);
  CHECK(std::abs(base - shifted) < 1e-10);
}

TEST_CASE("projection onto the constraint set") {
  // Mean-zero inputs reduce to the closed-form ball projection.
  Rng rng(33);
  for (int k = 0; k < 50; ++k) {
    Vec v(7);
    for (int i = 0; i < 7; ++i) v[i] = 2.0 * rng.normal();
    v.array() -= v.mean();
    const Vec proj = project_to_constraint(v);
    const Vec expected = v.norm() > 1.0 ? Vec(v / v.norm()) : v;
    CHECK((proj - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Always lands in the constraint set.
  for (int k = 0; k < 50; ++k) {
    Vec v(7);
    for (int i = 0; i < 7; ++i) v[i] = 3.0 * rng.normal();
    const Vec proj = project_to_constraint(v);
    CHECK(std::abs(proj.sum()) < 1e-9);
    CHECK(proj.norm() <= 1.0 + 1e-9);
  }
}

TEST_CASE("degenerate preference data stops immediately") {
  PreferenceSet set;
  set.first = RowMat::Random(8, 4);
  set.second = set.first;  // every pair identical
  set.winner = Eigen::VectorXi::Zero(8);
  const auto est = fit_bt_mle(set);
  CHECK(est.theta_hat.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(est.final_loss == doctest::Approx(std::log(2.0)));
  CHECK(est.converged);
}

TEST_CASE("bt mle recovers a constrained direction") {
  // World whose reward direction satisfies the mean-zero identifiability
  // constraint, enforced by centering the basis columns' combination.
  int hits = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SubspaceWorld w = make_world(8, 4, 0.0, 0.0, 300 + s);
    // Re-target theta to the mean-zero slice of the subspace.
    Vec th = w.reward_dir;
    Vec ones = Vec::Ones(8);
    Vec ones_on = w.basis * (w.basis.transpose() * ones);
    if (ones_on.norm() > 1e-8) {
      th -= ones_on * (th.dot(ones_on) / ones_on.squaredNorm());
    }
    th /= th.norm();
    w.reward_dir = th;

    const PreferenceSet set = make_preferences(w, 10000, 400 + s);
    BtFitOptions opts;
    opts.tol = 1e-6;
    opts.max_iters = 3000;
    const auto est = fit_bt_mle(set, opts);
    CHECK(std::abs(est.theta_hat.sum()) < 1e-9);
    CHECK(est.theta_hat.norm() <= 1.0 + 1e-9);
    const double cosine =
        est.theta_hat.dot(w.reward_dir) /
        (est.theta_hat.norm() * w.reward_dir.norm());
    if (cosine >= 0.95) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("bt mle improves with more comparisons") {
  int improved = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    SubspaceWorld w = make_world(8, 4, 0.0, 0.0, 500 + s);
    Vec th = w.reward_dir;
    Vec ones = Vec::Ones(8);
    Vec ones_on = w.basis * (w.basis.transpose() * ones);
    if (ones_on.norm() > 1e-8)
      th -= ones_on * (th.dot(ones_on) / ones_on.squaredNorm());
    th /= th.norm();
    w.reward_dir = th;

    const auto direction_error = [&](int n2, std::uint64_t seed) {
      BtFitOptions opts;
      opts.tol = 1e-6;
      opts.max_iters = 3000;
      const auto est = fit_bt_mle(make_preferences(w, n2, seed), opts);
      Vec unit = est.theta_hat / est.theta_hat.norm();
      return (unit - w.reward_dir).norm();
    };
    if (direction_error(4096, 600 + s) < direction_error(256, 700 + s))
      ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("bandit regret estimate") {
  SubspaceWorld w = make_world(8, 3, 5.0, 0.1, 61);
  const RowMat samples = sample_latent(w, 500, 3).points;

  LinearRewardEstimate exact;
  exact.theta_hat = w.reward_dir;
  CHECK(bandit_regret_estimate(exact, samples, w) == doctest::Approx(0.0));

  // theta perturbed by eps along an on-support unit direction v gives
  // exactly eps * mean |v.x|.
  Vec v = w.basis.col(1);
  const double eps = 0.05;
  LinearRewardEstimate off;
  off.theta_hat = w.reward_dir + eps * v;
  double mean_abs = 0.0;
  for (int i = 0; i < 500; ++i)
    mean_abs += std::abs(v.dot(samples.row(i).transpose()));
  mean_abs /= 500.0;
  CHECK(bandit_regret_estimate(off, samples, w) ==
        doctest::Approx(eps * mean_abs).epsilon(1e-9));
}
