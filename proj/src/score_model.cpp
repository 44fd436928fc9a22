#include "diffopt/score_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "diffopt/kernels.hpp"
#include "diffopt/rng.hpp"

namespace diffopt {

namespace {

constexpr double kLogNuMin = -6.907755278982137;  // log(1e-3)
constexpr double kLogNuMax = 6.907755278982137;   // log(1e3)

Mat qr_orthonormalize(const Mat& m) {
  const int D = static_cast<int>(m.rows());
  const int d = static_cast<int>(m.cols());
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ() * Mat::Identity(D, d);
  Mat r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

ScoreModel ScoreModel::random_init(int ambient_dim, int latent_dim, double nu0,
                                   const DiffusionSchedule& sched,
                                   std::uint64_t seed) {
  if (latent_dim < 1 || latent_dim > ambient_dim)
    throw std::invalid_argument("ScoreModel: need 1 <= d <= D");
  if (!(nu0 > 0.0)) throw std::invalid_argument("ScoreModel: nu0 must be > 0");
  ScoreModel m;
  Rng rng(derive_seed(seed, 0x494e4954ull));
  Mat g(ambient_dim, latent_dim);
  for (int j = 0; j < latent_dim; ++j)
    for (int i = 0; i < ambient_dim; ++i) g(i, j) = rng.normal();
  m.v_ = qr_orthonormalize(g);
  m.l_ = std::sqrt(1.0 - kSpdEps) * Mat::Identity(latent_dim, latent_dim);
  m.b_ = Vec::Zero(latent_dim);
  m.log_nu_ = std::log(nu0);
  m.sched_ = sched;
  return m;
}

ScoreModel ScoreModel::from_parameters(const Mat& encoder, const Mat& cov,
                                       const Vec& reward_dir, double nu,
                                       const DiffusionSchedule& sched) {
  if (!(nu > 0.0)) throw std::invalid_argument("ScoreModel: nu must be > 0");
  const int d = static_cast<int>(encoder.cols());
  Mat shifted = cov - kSpdEps * Mat::Identity(d, d);
  Eigen::LLT<Mat> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "ScoreModel::from_parameters: cov - eps I must be SPD");
  ScoreModel m;
  m.v_ = encoder;
  m.l_ = llt.matrixL();
  m.b_ = reward_dir;
  m.log_nu_ = std::log(nu);
  m.sched_ = sched;
  return m;
}

ScoreModel ScoreModel::from_checkpoint(const Mat& encoder, const Mat& factor,
                                       const Vec& reward_dir, double log_nu,
                                       const DiffusionSchedule& sched) {
  if (!std::isfinite(log_nu))
    throw std::invalid_argument("ScoreModel: log_nu must be finite");
  if (factor.rows() != encoder.cols() || factor.cols() != encoder.cols())
    throw std::invalid_argument("ScoreModel: factor shape mismatch");
  ScoreModel m;
  m.v_ = encoder;
  m.l_ = factor;
  m.b_ = reward_dir;
  m.log_nu_ = log_nu;
  m.sched_ = sched;
  if (m.orthonormality_error() > 1e-6)
    throw std::invalid_argument("ScoreModel: encoder is not orthonormal");
  return m;
}

Mat ScoreModel::head_cov() const {
  const int d = latent_dim();
  return l_ * l_.transpose() + kSpdEps * Mat::Identity(d, d);
}

double ScoreModel::head_noise() const { return std::exp(log_nu_); }

double ScoreModel::orthonormality_error() const {
  const int d = latent_dim();
  return (v_.transpose() * v_ - Mat::Identity(d, d))
      .cwiseAbs()
      .maxCoeff();
}

void ScoreModel::check_time(double t) const {
  const double lo = sched_.early_stop * (1.0 - 1e-9) - 1e-12;
  const double hi = sched_.terminal * (1.0 + 1e-9);
  if (t < lo || t > hi)
    throw std::invalid_argument("ScoreModel: t outside schedule [t0, T]");
}

Vec ScoreModel::psi(const Vec& u, double y, double t) const {
  check_time(t);
  const int d = latent_dim();
  const double a = DiffusionSchedule::alpha(t);
  const double h = DiffusionSchedule::h(t);
  const double nu = head_noise();
  const double c = h / (nu * nu);

  const Mat s_inv =
      Eigen::LLT<Mat>(head_cov()).solve(Mat::Identity(d, d));
  Mat precision = (a * a) * Mat::Identity(d, d) +
                  c * (b_ * b_.transpose()) + h * s_inv;
  const Vec m = a * u + (c * y) * b_;
  return a * Eigen::LLT<Mat>(precision).solve(m);
}

void ScoreModel::score_batch(const RowMat& points, double y, double t,
                             RowMat& out) const {
  check_time(t);
  const int D = ambient_dim();
  const int d = latent_dim();
  const auto n = points.rows();
  if (out.rows() != n || out.cols() != D) out.resize(n, D);

  const double a = DiffusionSchedule::alpha(t);
  const double h = DiffusionSchedule::h(t);
  const double nu = head_noise();
  const double c = h / (nu * nu);

  const Mat s_inv =
      Eigen::LLT<Mat>(head_cov()).solve(Mat::Identity(d, d));
  Mat precision = (a * a) * Mat::Identity(d, d) +
                  c * (b_ * b_.transpose()) + h * s_inv;
  Eigen::LLT<Mat> llt(precision);

  Vec m(d), psi_v(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* x = points.row(i).data();
    for (int j = 0; j < d; ++j)
      m[j] = a * kern::dot(v_.col(j).data(), x, static_cast<std::size_t>(D));
    m += (c * y) * b_;
    psi_v = a * llt.solve(m);

    double* s = out.row(i).data();
    for (int k = 0; k < D; ++k) s[k] = -x[k] / h;
    for (int j = 0; j < d; ++j)
      kern::axpy(psi_v[j] / h, v_.col(j).data(), s,
                 static_cast<std::size_t>(D));
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Per-draw objective, with x' = alpha x + sqrt(h) eps:
//
//   loss = | s(x', y, t) + eps / sqrt(h) |^2,
//   s    = (V psi - x') / h,   psi = alpha p,   p = B m,
//   m    = alpha V^T x' + c y b,   B = (alpha^2 I + c b b^T + h S^{-1})^{-1},
//   c    = h / nu^2.
//
// Backward pass, with r the residual, w = (2/h) V^T r and q = B w:
//   dV     = (2/h) r psi^T + alpha^2 x' q^T
//   db     = alpha c (y q - (p.b) q - (q.b) p)
//   dS     = alpha h (S^{-1} q)(S^{-1} p)^T        (then dL = (dS + dS^T) L)
//   dlognu = -2 c alpha (q.b) (y - p.b)
// These follow from dB = -B dP B for the head precision P.
struct GradAccum {
  const ScoreModel& model;
  int D, d;

  Mat s_inv;
  Mat gV, gS;
  Vec gb;
  double g_lnu = 0.0;
  double loss_acc = 0.0;
  long draws = 0;

  // workspace
  Vec xp, s_row, r_row, u, m, p, w, q, sinv_q, sinv_p;

  explicit GradAccum(const ScoreModel& model_)
      : model(model_),
        D(model_.ambient_dim()),
        d(model_.latent_dim()),
        s_inv(d, d),
        gV(D, d),
        gS(d, d),
        gb(d),
        xp(D),
        s_row(D),
        r_row(D),
        u(d),
        m(d),
        p(d),
        w(d),
        q(d),
        sinv_q(d),
        sinv_p(d) {}

  // Re-reads the head covariance (it changes between SGD iterations) and
  // zeroes the accumulators.
  void begin() {
    s_inv = Eigen::LLT<Mat>(model.head_cov()).solve(Mat::Identity(d, d));
    gV.setZero();
    gS.setZero();
    gb.setZero();
    g_lnu = 0.0;
    loss_acc = 0.0;
    draws = 0;
  }

  void add(const double* xi, double yi, double t, const double* eps) {
    const double a = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    const double sqrth = std::sqrt(h);
    const double nu = model.head_noise();
    const double c = h / (nu * nu);
    const auto nD = static_cast<std::size_t>(D);

    for (int i = 0; i < D; ++i) xp[i] = a * xi[i] + sqrth * eps[i];

    for (int j = 0; j < d; ++j)
      u[j] = kern::dot(model.encoder().col(j).data(), xp.data(), nD);
    m = a * u + (c * yi) * model.head_dir();

    Mat precision = (a * a) * Mat::Identity(d, d) +
                    c * (model.head_dir() * model.head_dir().transpose()) + h * s_inv;
    Eigen::LLT<Mat> llt(precision);
    p = llt.solve(m);

    // s = (V (alpha p) - x') / h; residual r = s + eps / sqrt(h)
    for (int i = 0; i < D; ++i) s_row[i] = -xp[i] / h;
    for (int j = 0; j < d; ++j)
      kern::axpy(a * p[j] / h, model.encoder().col(j).data(), s_row.data(), nD);
    for (int i = 0; i < D; ++i) r_row[i] = s_row[i] + eps[i] / sqrth;
    loss_acc += kern::sum_sq(r_row.data(), nD);

    for (int j = 0; j < d; ++j)
      w[j] = (2.0 / h) * kern::dot(model.encoder().col(j).data(), r_row.data(), nD);
    q = llt.solve(w);

    for (int j = 0; j < d; ++j) {
      kern::axpy((2.0 / h) * a * p[j], r_row.data(), gV.col(j).data(), nD);
      kern::axpy(a * a * q[j], xp.data(), gV.col(j).data(), nD);
    }

    const double pb = p.dot(model.head_dir());
    const double qb = q.dot(model.head_dir());
    gb += (a * c) * (yi * q - pb * q - qb * p);

    sinv_q.noalias() = s_inv * q;
    sinv_p.noalias() = s_inv * p;
    gS.noalias() += (a * h) * (sinv_q * sinv_p.transpose());

    g_lnu += -2.0 * c * a * qb * (yi - pb);
    ++draws;
  }
};

struct Trainer {
  const RowMat& x;
  const Vec& y;
  ScoreModel& model;
  const TrainOptions& opts;
  Rng rng;
  GradAccum acc;
  Vec eps;
  double lr;
  int since_decay = 0;

  Trainer(const RowMat& x_, const Vec& y_, ScoreModel& model_,
          const TrainOptions& opts_)
      : x(x_),
        y(y_),
        model(model_),
        opts(opts_),
        rng(derive_seed(opts_.seed, 0x5452414eull)),
        acc(model_),
        eps(model_.ambient_dim()),
        lr(opts_.lr) {}

  double iteration() {
    const double t0 = model.sched_.early_stop;
    const double T = model.sched_.terminal;
    const auto n = x.rows();
    const int D = acc.D;

    acc.begin();
    for (int bi = 0; bi < opts.batch; ++bi) {
      const auto idx = static_cast<Eigen::Index>(
          rng.below(static_cast<std::uint64_t>(n)));
      for (int k = 0; k < opts.t_samples; ++k) {
        const double t = rng.uniform(t0, T);
        rng.fill_normal(eps.data(), static_cast<std::size_t>(D));
        acc.add(x.row(idx).data(), y[idx], t, eps.data());
      }
    }

    const double scale = 1.0 / static_cast<double>(acc.draws);
    const double loss = acc.loss_acc * scale;

    if (opts.lr_decay_every > 0 && ++since_decay >= opts.lr_decay_every) {
      lr *= opts.lr_decay_factor;
      since_decay = 0;
    }
    model.b_ -= (lr * scale) * acc.gb;
    Mat gL = (acc.gS + acc.gS.transpose()) * model.l_;
    model.l_ -= (lr * scale) * Mat(gL.triangularView<Eigen::Lower>());
    model.log_nu_ -= lr * scale * acc.g_lnu;
    if (model.log_nu_ < kLogNuMin) model.log_nu_ = kLogNuMin;
    if (model.log_nu_ > kLogNuMax) model.log_nu_ = kLogNuMax;

    Mat gV = scale * acc.gV;
    Mat vtg = model.v_.transpose() * gV;
    Mat sym = 0.5 * (vtg + vtg.transpose());
    Mat tangent = gV - model.v_ * sym;
    model.v_ -= lr * tangent;
    model.v_ = qr_orthonormalize(model.v_);

    return loss;
  }
};

DsmGradients dsm_loss_gradients(const ScoreModel& model, const RowMat& points,
                                const Vec& labels, int t_samples,
                                std::uint64_t seed) {
  if (points.rows() == 0)
    throw std::invalid_argument("dsm_loss_gradients: batch must be nonempty");
  if (t_samples < 1)
    throw std::invalid_argument("dsm_loss_gradients: t_samples must be >= 1");
  const double t0 = model.schedule().early_stop;
  const double T = model.schedule().terminal;
  const int D = model.ambient_dim();

  GradAccum acc(model);
  acc.begin();
  Rng rng(derive_seed(seed, 0x44534d47ull));
  Vec eps(D);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int k = 0; k < t_samples; ++k) {
      const double t = rng.uniform(t0, T);
      rng.fill_normal(eps.data(), static_cast<std::size_t>(D));
      acc.add(points.row(i).data(), labels[i], t, eps.data());
    }
  }

  const double scale = 1.0 / static_cast<double>(acc.draws);
  DsmGradients out;
  out.loss = acc.loss_acc * scale;
  out.g_encoder = scale * acc.gV;
  Mat gL = scale * (acc.gS + acc.gS.transpose()) * model.head_factor();
  out.g_factor = gL.triangularView<Eigen::Lower>();
  out.g_dir = scale * acc.gb;
  out.g_log_nu = scale * acc.g_lnu;
  return out;
}

DsmLossReport dsm_loss(const ScoreModel& model, const RowMat& points,
                       const Vec& labels, int t_samples, std::uint64_t seed) {
  if (points.rows() == 0)
    throw std::invalid_argument("dsm_loss: batch must be nonempty");
  if (t_samples < 1)
    throw std::invalid_argument("dsm_loss: t_samples must be >= 1");
  const int D = static_cast<int>(points.cols());
  const double t0 = model.schedule().early_stop;
  const double T = model.schedule().terminal;

  Rng rng(derive_seed(seed, 0x44534d4cull));
  RowMat xp(1, D), s(1, D);
  Vec eps(D), target(D);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int k = 0; k < t_samples; ++k) {
      const double t = rng.uniform(t0, T);
      const double a = DiffusionSchedule::alpha(t);
      const double h = DiffusionSchedule::h(t);
      const double sqrth = std::sqrt(h);
      rng.fill_normal(eps.data(), static_cast<std::size_t>(D));
      for (int j = 0; j < D; ++j) {
        xp(0, j) = a * points(i, j) + sqrth * eps[j];
        target[j] = -eps[j] / sqrth;
      }
      model.score_batch(xp, labels[i], t, s);
      acc += kern::diff_sq(s.row(0).data(), target.data(),
                           static_cast<std::size_t>(D));
    }
  }
  DsmLossReport rep;
  rep.loss = acc / (static_cast<double>(points.rows()) *
                    static_cast<double>(t_samples));
  rep.batch = static_cast<int>(points.rows());
  rep.t_samples = t_samples;
  return rep;
}

TrainResult train_score(const PseudoLabeledSet& data,
                        const DiffusionSchedule& sched,
                        const TrainOptions& opts,
                        const ScoreModel* warm_start) {
  if (data.points.rows() == 0)
    throw std::invalid_argument("train_score: data must be nonempty");
  const int D = static_cast<int>(data.points.cols());

  TrainResult result;
  if (warm_start) {
    result.model = *warm_start;
  } else {
    if (opts.latent_dim < 1)
      throw std::invalid_argument("train_score: latent_dim must be set");
    if (!(opts.nu0 > 0.0))
      throw std::invalid_argument("train_score: nu0 must be set");
    result.model = ScoreModel::random_init(D, opts.latent_dim, opts.nu0, sched,
                                           derive_seed(opts.seed, 0x56494e49ull));
  }
  result.model.set_schedule(sched);

  result.loss_trace.reserve(static_cast<std::size_t>(opts.iters));
  Trainer trainer(data.points, data.pseudo_labels, result.model, opts);
  for (int it = 0; it < opts.iters; ++it) {
    const double loss = trainer.iteration();
    if (!std::isfinite(loss) || loss > opts.diverge_threshold)
      throw std::runtime_error("train_score: diverged at iteration " +
                               std::to_string(it));
    result.loss_trace.push_back(loss);
  }
  return result;
}

}  // namespace diffopt
