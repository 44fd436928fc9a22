#pragma once

#include <cstdint>
#include <vector>

#include "diffopt/datasets.hpp"
#include "diffopt/schedule.hpp"
#include "diffopt/score_api.hpp"
#include "diffopt/types.hpp"

namespace diffopt {

// Learned conditional score in the encoder-decoder class
//
//   s(x, y, t) = (1/h(t)) (V psi(V^T x, y, t) - x),
//
// with an orthonormal encoder V (D x d) and a Gaussian-form head
//
//   psi(u, y, t) = alpha(t) B_t (alpha(t) u + (h(t)/nu^2) y b),
//   B_t = (alpha^2 I + (h/nu^2) b b^T + h S^{-1})^{-1},
//
// whose parameters (S, b, nu) are learned stand-ins for the latent
// covariance, the latent reward direction, and the conditioning noise scale.
// S is kept SPD through the factor parameterization S = L L^T + eps I.
class ScoreModel : public ConditionalScore {
 public:
  static constexpr double kSpdEps = 1e-6;

  ScoreModel() = default;

  static ScoreModel random_init(int ambient_dim, int latent_dim, double nu0,
                                const DiffusionSchedule& sched,
                                std::uint64_t seed);

  // Builds a model with exactly the given head parameters (used to realize
  // oracle parameters inside the model class). cov - eps I must be SPD.
  static ScoreModel from_parameters(const Mat& encoder, const Mat& cov,
                                    const Vec& reward_dir, double nu,
                                    const DiffusionSchedule& sched);

  // Restores a checkpoint verbatim: factor and log-noise are taken as-is so
  // that save/load round-trips bit-for-bit.
  static ScoreModel from_checkpoint(const Mat& encoder, const Mat& factor,
                                    const Vec& reward_dir, double log_nu,
                                    const DiffusionSchedule& sched);

  void score_batch(const RowMat& points, double y, double t,
                   RowMat& out) const override;

  // Head evaluation on an encoded point. t must lie within [t0, T].
  Vec psi(const Vec& u, double y, double t) const;

  const Mat& encoder() const { return v_; }
  Mat head_cov() const;  // S = L L^T + eps I
  const Mat& head_factor() const { return l_; }
  const Vec& head_dir() const { return b_; }
  double head_noise() const;  // nu
  double head_log_noise() const { return log_nu_; }
  const DiffusionSchedule& schedule() const { return sched_; }
  void set_schedule(const DiffusionSchedule& sched) { sched_ = sched; }
  int ambient_dim() const override { return static_cast<int>(v_.rows()); }
  int latent_dim() const { return static_cast<int>(v_.cols()); }

  // max |V^T V - I| entry; tests pin this below 1e-8 throughout training.
  double orthonormality_error() const;

 private:
  friend struct Trainer;

  Mat v_;          // D x d, orthonormal columns
  Mat l_;          // d x d lower-triangular factor
  Vec b_;          // d
  double log_nu_ = 0.0;
  DiffusionSchedule sched_;

  void check_time(double t) const;
};

struct DsmLossReport {
  double loss = 0.0;
  int batch = 0;
  int t_samples = 0;
};

// Loss plus parameter gradients of the same Monte-Carlo estimate, averaged
// over every row of `points` with draws fixed by `seed`. g_encoder is the raw
// Euclidean gradient (tangent projection happens at update time).
struct DsmGradients {
  double loss = 0.0;
  Mat g_encoder;    // D x d
  Mat g_factor;     // d x d, lower triangle
  Vec g_dir;        // d
  double g_log_nu = 0.0;
};

DsmGradients dsm_loss_gradients(const ScoreModel& model, const RowMat& points,
                                const Vec& labels, int t_samples,
                                std::uint64_t seed);

// Monte-Carlo denoising score-matching loss over the given points/labels:
// t ~ U[t0, T], x' = alpha x + sqrt(h) eps, target score -(x' - alpha x)/h.
// Time-averaged, so values are comparable across schedules.
DsmLossReport dsm_loss(const ScoreModel& model, const RowMat& points,
                       const Vec& labels, int t_samples, std::uint64_t seed);

struct TrainOptions {
  int latent_dim = 0;   // width of the encoder; required unless warm-started
  double nu0 = 0.0;     // initial head noise; required unless warm-started
  int iters = 20000;
  int batch = 128;
  int t_samples = 4;
  double lr = 1e-2;
  // Optional step decay (off by default): lr *= lr_decay_factor every
  // lr_decay_every iterations. Used where the SGD noise floor of a constant
  // step would mask the quantity being measured.
  int lr_decay_every = 0;
  double lr_decay_factor = 0.5;
  std::uint64_t seed = 0;
  double diverge_threshold = 1e6;
};

struct TrainResult {
  ScoreModel model;
  std::vector<double> loss_trace;  // minibatch loss per iteration
};

// SGD on the DSM loss; the encoder gradient is projected to the Stiefel
// tangent space and the iterate retracted by QR after every step.
TrainResult train_score(const PseudoLabeledSet& data,
                        const DiffusionSchedule& sched,
                        const TrainOptions& opts,
                        const ScoreModel* warm_start = nullptr);

}  // namespace diffopt
