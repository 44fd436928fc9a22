#include "diffopt/datasets.hpp"

#include <cmath>
#include <stdexcept>

#include "diffopt/rng.hpp"

namespace diffopt {

LabeledSet make_labeled(const SubspaceWorld& world, int n2,
                        std::uint64_t seed) {
  if (n2 < 0) throw std::invalid_argument("make_labeled: n2 must be >= 0");
  LabeledSet set;
  set.points = sample_latent(world, n2, derive_seed(seed, 1)).points;
  set.labels = true_reward_batch(world, set.points);
  if (world.label_noise > 0.0) {
    Rng rng(derive_seed(seed, 2));
    for (int i = 0; i < n2; ++i)
      set.labels[i] += world.label_noise * rng.normal();
  }
  return set;
}

double bt_prob_from_rewards(double r1, double r2) {
  // 1 / (1 + exp(r2 - r1)) with the exponent kept nonpositive.
  const double gap = r1 - r2;
  if (gap >= 0.0) return 1.0 / (1.0 + std::exp(-gap));
  const double e = std::exp(gap);
  return e / (1.0 + e);
}

double bt_choice_prob(const SubspaceWorld& world, const Vec& x1,
                      const Vec& x2) {
  return bt_prob_from_rewards(true_reward(world, x1), true_reward(world, x2));
}

PreferenceSet make_preferences(const SubspaceWorld& world, int n2,
                               std::uint64_t seed) {
  if (n2 < 0) throw std::invalid_argument("make_preferences: n2 must be >= 0");
  PreferenceSet set;
  set.first = sample_latent(world, n2, derive_seed(seed, 1)).points;
  set.second = sample_latent(world, n2, derive_seed(seed, 2)).points;
  set.winner.resize(n2);
  if (n2 == 0) return set;

  const Vec r1 = true_reward_batch(world, set.first);
  const Vec r2 = true_reward_batch(world, set.second);
  Rng rng(derive_seed(seed, 3));
  for (int i = 0; i < n2; ++i) {
    const double p_first = bt_prob_from_rewards(r1[i], r2[i]);
    set.winner[i] = rng.uniform() < p_first ? 0 : 1;
  }
  return set;
}

PseudoLabeledSet pseudo_label(const RowMat& points, const RewardFn& reward_fn,
                              double nu, std::uint64_t seed) {
  if (nu < 0.0) throw std::invalid_argument("pseudo_label: nu must be >= 0");
  const int n = static_cast<int>(points.rows());
  PseudoLabeledSet set;
  set.points = points;
  set.pseudo_labels.resize(n);
  Rng rng(derive_seed(seed, 4));
  for (int i = 0; i < n; ++i) {
    double y = reward_fn(points.row(i).transpose());
    if (nu > 0.0) y += nu * rng.normal();
    set.pseudo_labels[i] = y;
  }
  return set;
}

}  // namespace diffopt
