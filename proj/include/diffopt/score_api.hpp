#pragma once

#include "diffopt/types.hpp"

namespace diffopt {

// A conditional score s(x, y, t) evaluated one batch at a time so that
// per-time factorizations are shared across rows. Implementations are
// immutable during evaluation and safe to call from multiple threads.
class ConditionalScore {
 public:
  virtual ~ConditionalScore() = default;

  virtual int ambient_dim() const = 0;

  // out.row(i) = s(points.row(i), y, t); out must have the shape of points.
  virtual void score_batch(const RowMat& points, double y, double t,
                           RowMat& out) const = 0;

  Vec score(const Vec& x, double y, double t) const {
    RowMat in(1, x.size());
    in.row(0) = x.transpose();
    RowMat out(1, x.size());
    score_batch(in, y, t, out);
    return out.row(0).transpose();
  }
};

}  // namespace diffopt
