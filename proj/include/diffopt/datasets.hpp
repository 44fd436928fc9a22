#pragma once

#include <cstdint>
#include <functional>

#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

struct LabeledSet {
  RowMat points;  // n2 x D
  Vec labels;     // n2
};

// Pairwise comparisons; winner[i] == 0 means first[i] was preferred.
struct PreferenceSet {
  RowMat first;   // n2 x D
  RowMat second;  // n2 x D
  Eigen::VectorXi winner;

  Eigen::Index size() const { return winner.size(); }
  // Row of the preferred point in pair i.
  Eigen::Block<const RowMat, 1, Eigen::Dynamic, true> winner_row(
      Eigen::Index i) const {
    return winner[i] == 0 ? first.row(i) : second.row(i);
  }
};

struct PseudoLabeledSet {
  RowMat points;      // n1 x D
  Vec pseudo_labels;  // n1
};

using RewardFn = std::function<double(Eigen::Ref<const Vec>)>;

// x_i on-support i.i.d., y_i = f(x_i) + N(0, label_noise^2).
LabeledSet make_labeled(const SubspaceWorld& world, int n2, std::uint64_t seed);

// Bradley-Terry probability that the first argument is preferred, computed
// from two reward values in a way that cannot overflow.
double bt_prob_from_rewards(double r1, double r2);

double bt_choice_prob(const SubspaceWorld& world, const Vec& x1, const Vec& x2);

// Pairs i.i.d. from the data distribution, winner drawn from the
// Bradley-Terry choice probability.
PreferenceSet make_preferences(const SubspaceWorld& world, int n2,
                               std::uint64_t seed);

// Annotates points with reward_fn plus N(0, nu^2) noise.
PseudoLabeledSet pseudo_label(const RowMat& points, const RewardFn& reward_fn,
                              double nu, std::uint64_t seed);

}  // namespace diffopt
