#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "diffopt/config.hpp"
#include "diffopt/io.hpp"
#include "diffopt/rng.hpp"

using namespace diffopt;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path(std::string("io_test_") + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

bool bit_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

TEST_CASE("double formatting round-trips exactly") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-12.0, 12.0));
    const double back = std::strtod(io::format_double(v).c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("world checkpoint round-trip is exact") {
  const SubspaceWorld w = make_world(12, 5, 5.0, 0.1, 77);
  TempFile f("world.txt");
  io::save_world(w, f.path);
  const SubspaceWorld back = io::load_world(f.path);
  CHECK(back.ambient_dim == w.ambient_dim);
  CHECK(back.latent_dim == w.latent_dim);
  CHECK(back.penalty_coef == w.penalty_coef);
  CHECK(back.label_noise == w.label_noise);
  CHECK(back.pseudo_noise == w.pseudo_noise);
  CHECK(bit_equal(back.basis, w.basis));
  CHECK(bit_equal(back.latent_cov, w.latent_cov));
  CHECK(bit_equal(back.reward_dir, w.reward_dir));
}

TEST_CASE("estimate checkpoint round-trip is exact") {
  LinearRewardEstimate est;
  est.theta_hat = Vec::LinSpaced(7, -1.3, 2.9);
  est.theta_hat[3] = 1.0 / 3.0;
  est.mode = RewardFitMode::BtMle;
  est.lambda = 0.25;
  est.final_loss = 0.6931471805599453;
  est.iterations = 321;
  est.converged = false;
  TempFile f("est.txt");
  io::save_estimate(est, f.path);
  const auto back = io::load_estimate(f.path);
  CHECK(back.mode == RewardFitMode::BtMle);
  CHECK(back.lambda == est.lambda);
  CHECK(back.final_loss == est.final_loss);
  CHECK(back.iterations == est.iterations);
  CHECK(back.converged == est.converged);
  CHECK(bit_equal(back.theta_hat, est.theta_hat));
}

TEST_CASE("score model checkpoint round-trip is exact") {
  const auto sched = make_schedule(10.0, 0.03, 5e-3);
  ScoreModel m = ScoreModel::random_init(9, 3, 0.35, sched, 5);
  TempFile f("model.txt");
  io::save_model(m, f.path);
  const ScoreModel back = io::load_model(f.path);
  CHECK(bit_equal(back.encoder(), m.encoder()));
  CHECK(bit_equal(back.head_factor(), m.head_factor()));
  CHECK(bit_equal(back.head_dir(), m.head_dir()));
  CHECK(back.head_log_noise() == m.head_log_noise());
  CHECK(back.schedule().terminal == sched.terminal);
  CHECK(back.schedule().early_stop == sched.early_stop);
  CHECK(back.schedule().step == sched.step);

  // Same scores bit for bit.
  RowMat x(2, 9), s1(2, 9), s2(2, 9);
  Rng rng(9);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 9; ++j) x(i, j) = rng.normal();
  m.score_batch(x, 0.7, 1.3, s1);
  back.score_batch(x, 0.7, 1.3, s2);
  CHECK(bit_equal(s1, s2));
}

TEST_CASE("dataset csv round-trips") {
  const SubspaceWorld w = make_world(5, 2, 5.0, 0.1, 3);

  SUBCASE("labeled") {
    const LabeledSet data = make_labeled(w, 17, 7);
    TempFile f("labeled.csv");
    io::save_labeled_csv(data, f.path);
    const LabeledSet back = io::load_labeled_csv(f.path);
    CHECK(bit_equal(back.points, data.points));
    CHECK(bit_equal(back.labels, data.labels));
  }

  SUBCASE("preferences") {
    const PreferenceSet data = make_preferences(w, 17, 7);
    TempFile f("prefs.csv");
    io::save_preferences_csv(data, f.path);
    const PreferenceSet back = io::load_preferences_csv(f.path);
    CHECK(bit_equal(back.first, data.first));
    CHECK(bit_equal(back.second, data.second));
    CHECK((back.winner - data.winner).cwiseAbs().maxCoeff() == 0);
  }

  SUBCASE("pseudo-labeled") {
    const RowMat pts = sample_latent(w, 17, 9).points;
    const PseudoLabeledSet data =
        pseudo_label(pts, [](Eigen::Ref<const Vec> x) { return x[0]; }, 0.2, 5);
    TempFile f("pseudo.csv");
    io::save_pseudo_csv(data, f.path);
    const PseudoLabeledSet back = io::load_pseudo_csv(f.path);
    CHECK(bit_equal(back.points, data.points));
    CHECK(bit_equal(back.pseudo_labels, data.pseudo_labels));
  }

  SUBCASE("bare points") {
    const RowMat pts = sample_latent(w, 11, 13).points;
    TempFile f("points.csv");
    io::save_points_csv(pts, f.path);
    CHECK(bit_equal(io::load_points_csv(f.path), pts));
  }
}

namespace {

std::vector<EvalReport> sample_reports() {
  std::vector<EvalReport> reports;
  Rng rng(21);
  for (int i = 0; i < 5; ++i) {
    EvalReport r;
    r.target_a = i;
    r.mean_reward = rng.normal();
    r.suboptimality = r.target_a - r.mean_reward;
    r.E1_est = std::abs(rng.normal());
    r.E2_est = std::abs(rng.normal());
    r.E3_est = std::abs(rng.normal());
    r.subspace_angle = rng.uniform();
    r.off_support_dev = rng.uniform();
    r.shift_trace_ridge = 10.0 * rng.uniform();
    r.shift_trace_pref = 10.0 * rng.uniform();
    r.m_of_a = 5.0 * rng.uniform();
    r.n1 = 1024;
    r.n2 = 256;
    r.seed = 42 + static_cast<std::uint64_t>(i);
    reports.push_back(r);
  }
  return reports;
}

bool reports_equal(const std::vector<EvalReport>& a,
                   const std::vector<EvalReport>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.target_a != y.target_a || x.mean_reward != y.mean_reward ||
        x.suboptimality != y.suboptimality || x.E1_est != y.E1_est ||
        x.E2_est != y.E2_est || x.E3_est != y.E3_est ||
        x.subspace_angle != y.subspace_angle ||
        x.off_support_dev != y.off_support_dev ||
        x.shift_trace_ridge != y.shift_trace_ridge ||
        x.shift_trace_pref != y.shift_trace_pref || x.m_of_a != y.m_of_a ||
        x.n1 != y.n1 || x.n2 != y.n2 || x.seed != y.seed)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("report csv round-trips exactly and has the documented header") {
  const auto reports = sample_reports();
  TempFile f("reports.csv");
  io::save_reports_csv(reports, f.path);

  std::ifstream in(f.path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "target_a,mean_reward,suboptimality,E1_est,E2_est,E3_est,"
        "subspace_angle,off_support_dev,shift_trace_ridge,shift_trace_pref,"
        "m_of_a,n1,n2,seed");

  CHECK(reports_equal(io::load_reports_csv(f.path), reports));
}

TEST_CASE("report json round-trips and passes a schema check") {
  const auto reports = sample_reports();
  TempFile f("reports.json");
  io::save_reports_json(reports, f.path);
  CHECK(reports_equal(io::load_reports_json(f.path), reports));

  // Strict schema: array of objects with exactly the field names, numbers.
  std::ifstream in(f.path);
  const nlohmann::json arr = nlohmann::json::parse(in);
  REQUIRE(arr.is_array());
  const std::vector<std::string> keys = {
      "target_a", "mean_reward", "suboptimality", "E1_est", "E2_est",
      "E3_est", "subspace_angle", "off_support_dev", "shift_trace_ridge",
      "shift_trace_pref", "m_of_a", "n1", "n2", "seed"};
  for (const auto& obj : arr) {
    REQUIRE(obj.is_object());
    CHECK(obj.size() == keys.size());
    for (const auto& k : keys) {
      REQUIRE(obj.contains(k));
      CHECK(obj.at(k).is_number());
    }
  }
}

TEST_CASE("config parsing") {
  TempFile f("config.txt");
  {
    std::ofstream out(f.path);
    out << "# comment line\n";
    out << "D = 16\n";
    out << "d = 4\n";
    out << "targets = 0, 1, 2.5\n";
    out << "seeds = 3 4\n";
    out << "t0 = auto\n";
    out << "supervision = preferences\n";
    out << "score_source = oracle\n";
    out << "n1 = 4096  # trailing comment\n";
  }
  const ExperimentConfig cfg = parse_config_file(f.path);
  CHECK(cfg.D == 16);
  CHECK(cfg.d == 4);
  REQUIRE(cfg.targets.size() == 3);
  CHECK(cfg.targets[2] == 2.5);
  REQUIRE(cfg.seeds.size() == 2);
  CHECK(cfg.seeds[1] == 4);
  CHECK(cfg.supervision == Supervision::Preferences);
  CHECK(cfg.score_source == ScoreSource::Oracle);
  CHECK(cfg.n1 == 4096);
  // auto t0 resolves through the default rule.
  CHECK(cfg.resolved_t0() ==
        doctest::Approx(default_t0(16, 4, 4096)).epsilon(1e-12));
  cfg.validate();
}

TEST_CASE("unknown config keys are rejected") {
  TempFile f("bad_config.txt");
  {
    std::ofstream out(f.path);
    out << "D = 16\n";
    out << "mystery_knob = 3\n";
  }
  CHECK_THROWS_AS(parse_config_file(f.path), std::invalid_argument);

  ExperimentConfig cfg;
  CHECK_THROWS_AS(apply_override(cfg, "nope", "1"), std::invalid_argument);
}

TEST_CASE("shipped configurations parse and validate") {
  for (const char* name :
       {"configs/synthetic_baseline.cfg", "configs/reduced_scale.cfg"}) {
    const std::string path = std::string(DIFFOPT_SOURCE_DIR) + "/" + name;
    const ExperimentConfig cfg = parse_config_file(path);
    cfg.validate();
    CHECK(cfg.D == 64);
    CHECK(cfg.d == 16);
  }
}

TEST_CASE("config validation catches bad combinations") {
  ExperimentConfig cfg;
  cfg.d = 100;  // > D
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.integrator = "leapfrog";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.t0 = 20.0;  // >= T
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
