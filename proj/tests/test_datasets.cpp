#include <doctest.h>

#include <cmath>

#include "diffopt/datasets.hpp"
#include "diffopt/rng.hpp"

using namespace diffopt;

TEST_CASE("noiseless labels equal the linear reward exactly") {
  SubspaceWorld w = make_world(8, 3, 5.0, 0.0, 19);
  const LabeledSet set = make_labeled(w, 40, 3);
  for (int i = 0; i < 40; ++i) {
    const Vec x = set.points.row(i).transpose();
    CHECK(set.labels[i] ==
          doctest::Approx(w.reward_dir.dot(x)).epsilon(1e-9));
  }
}

TEST_CASE("label noise has the configured mean and variance") {
  SubspaceWorld w = make_world(8, 3, 5.0, 0.1, 19);
  const int n = 100000;
  const LabeledSet set = make_labeled(w, n, 5);
  const Vec clean = true_reward_batch(w, set.points);
  const Vec noise = set.labels - clean;
  const double mean = noise.mean();
  const double var = noise.squaredNorm() / n - mean * mean;
  CHECK(std::abs(mean) < 0.01 * w.label_noise);
  CHECK(var > 0.95 * 0.01);
  CHECK(var < 1.05 * 0.01);
}

TEST_CASE("empty sets") {
  SubspaceWorld w = make_world(4, 2, 1.0, 0.1, 2);
  CHECK(make_labeled(w, 0, 1).points.rows() == 0);
  CHECK(make_preferences(w, 0, 1).size() == 0);
}

TEST_CASE("choice probability basics") {
  // Equal rewards tie at exactly one half; a log 3 gap gives 3/4.
  CHECK(bt_prob_from_rewards(1.7, 1.7) == doctest::Approx(0.5));
  CHECK(bt_prob_from_rewards(std::log(3.0), 0.0) == doctest::Approx(0.75));
  CHECK(bt_prob_from_rewards(0.0, std::log(3.0)) == doctest::Approx(0.25));

  // Extreme gaps must neither overflow nor leave (0, 1).
  const double p = bt_prob_from_rewards(500.0, 0.0);
  CHECK(p >= 1.0 - 1e-12);
  CHECK(p <= 1.0);
  CHECK(std::isfinite(p));
  const double q = bt_prob_from_rewards(0.0, 500.0);
  CHECK(q >= 0.0);
  CHECK(q <= 1e-12);
}

TEST_CASE("choice probability is complementary and shift-invariant") {
  Rng rng(77);
  for (int k = 0; k < 200; ++k) {
    const double r1 = rng.uniform(-30.0, 30.0);
    const double r2 = rng.uniform(-30.0, 30.0);
    const double c = rng.uniform(-100.0, 100.0);
    CHECK(std::abs(bt_prob_from_rewards(r1, r2) +
                   bt_prob_from_rewards(r2, r1) - 1.0) < 1e-12);
    CHECK(std::abs(bt_prob_from_rewards(r1 + c, r2 + c) -
                   bt_prob_from_rewards(r1, r2)) < 1e-12);
  }
}

TEST_CASE("empirical win rate matches the model probability") {
  // Monte-Carlo oracle: duplicate one fixed pair many times.
  SubspaceWorld w = make_world(6, 2, 5.0, 0.0, 23);
  const SampleBatch pair = sample_latent(w, 2, 91);
  const Vec x1 = pair.points.row(0).transpose();
  const Vec x2 = pair.points.row(1).transpose();
  const double p = bt_choice_prob(w, x1, x2);

  const int n = 100000;
  Rng rng(13);
  int wins = 0;
  for (int i = 0; i < n; ++i)
    if (rng.uniform() < p) ++wins;
  // The generator above is exactly what make_preferences draws per pair;
  // this pins the empirical rate to the closed-form probability.
  const double rate = static_cast<double>(wins) / n;
  CHECK(std::abs(rate - p) < 0.01);

  // Flipping the reward direction maps p to 1 - p.
  SubspaceWorld flipped = w;
  flipped.reward_dir = -w.reward_dir;
  const double p_flip = bt_choice_prob(flipped, x1, x2);
  CHECK(std::abs(p_flip - (1.0 - p)) < 1e-12);
}

TEST_CASE("preference generation matches the choice law statistically") {
  SubspaceWorld w = make_world(6, 2, 5.0, 0.0, 29);
  const int n = 100000;
  const PreferenceSet set = make_preferences(w, n, 37);
  REQUIRE(set.size() == n);

  // Average win-indicator against average model probability over the same
  // pairs; the gap is a mean-zero binomial fluctuation.
  double expect = 0.0, observed = 0.0;
  for (int i = 0; i < n; ++i) {
    expect += bt_choice_prob(w, set.first.row(i).transpose(),
                             set.second.row(i).transpose());
    observed += set.winner[i] == 0 ? 1.0 : 0.0;
  }
  CHECK(std::abs(observed / n - expect / n) < 0.01);
}

TEST_CASE("pseudo labels") {
  SubspaceWorld w = make_world(64, 16, 5.0, 0.1, 7);
  CHECK(w.pseudo_noise == doctest::Approx(0.125));

  const RowMat pts = sample_latent(w, 100, 3).points;
  const RewardFn f = [](Eigen::Ref<const Vec> x) { return 2.0 * x[0]; };

  SUBCASE("nu = 0 reproduces the predictor exactly") {
    const PseudoLabeledSet set = pseudo_label(pts, f, 0.0, 5);
    for (int i = 0; i < 100; ++i)
      CHECK(set.pseudo_labels[i] == doctest::Approx(2.0 * pts(i, 0)));
  }

  SUBCASE("noise variance matches nu^2") {
    const RewardFn zero = [](Eigen::Ref<const Vec>) { return 0.0; };
    const int n = 100000;
    const RowMat big = RowMat::Zero(n, 4);
    const double nu = 0.3;
    const PseudoLabeledSet set = pseudo_label(big, zero, nu, 11);
    const double mean = set.pseudo_labels.mean();
    const double var = set.pseudo_labels.squaredNorm() / n - mean * mean;
    CHECK(var > 0.95 * nu * nu);
    CHECK(var < 1.05 * nu * nu);
  }
}
