#include "diffopt/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace diffopt::io {

namespace {

using nlohmann::json;

void fail(const std::string& what) { throw std::runtime_error(what); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open for reading: " + path);
  return in;
}

// ------------------------------ key = value -------------------------------

struct KvFile {
  std::map<std::string, std::string> entries;

  static KvFile read(const std::string& path) {
    KvFile kv;
    auto in = open_in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("malformed line in " + path + ": " + line);
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      const auto trim = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      trim(key);
      trim(value);
      if (kv.entries.count(key)) fail("duplicate key in " + path + ": " + key);
      kv.entries[key] = value;
    }
    return kv;
  }

  const std::string& get(const std::string& key) const {
    const auto it = entries.find(key);
    if (it == entries.end()) fail("missing key: " + key);
    return it->second;
  }

  double get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) fail("bad number for key " + key);
    return v;
  }

  long long get_int(const std::string& key) const {
    return std::stoll(get(key));
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::istringstream ss(get(key));
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    return out;
  }
};

void write_kv(std::ofstream& out, const std::string& key, const std::string& v) {
  out << key << " = " << v << "\n";
}

void write_kv(std::ofstream& out, const std::string& key, double v) {
  write_kv(out, key, format_double(v));
}

void write_kv(std::ofstream& out, const std::string& key, long long v) {
  write_kv(out, key, std::to_string(v));
}

// Row-major flattening for any Eigen matrix expression.
template <typename M>
std::string flatten(const M& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!out.empty()) out += ' ';
      out += format_double(m(i, j));
    }
  return out;
}

Mat unflatten(const std::vector<double>& v, Eigen::Index rows,
              Eigen::Index cols, const std::string& what) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    fail("wrong element count for " + what);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
  return m;
}

// --------------------------------- CSV ------------------------------------

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  static Csv read(const std::string& path) {
    Csv csv;
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail("empty csv: " + path);
    csv.header = split_csv(line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != csv.header.size())
        fail("ragged csv row in " + path);
      std::vector<double> row;
      row.reserve(cells.size());
      for (const auto& c : cells) {
        char* end = nullptr;
        row.push_back(std::strtod(c.c_str(), &end));
        if (end == c.c_str()) fail("bad csv cell in " + path + ": " + c);
      }
      csv.rows.push_back(std::move(row));
    }
    return csv;
  }
};

void expect_header(const Csv& csv, const std::vector<std::string>& want,
                   const std::string& path) {
  if (csv.header != want) fail("unexpected csv header in " + path);
}

std::vector<std::string> point_header(int D, const std::string& prefix) {
  std::vector<std::string> h;
  h.reserve(static_cast<std::size_t>(D));
  for (int j = 0; j < D; ++j) h.push_back(prefix + "_" + std::to_string(j));
  return h;
}

void write_header(std::ofstream& out, const std::vector<std::string>& h) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) out << ',';
    out << h[i];
  }
  out << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --------------------------------- world ----------------------------------

void save_world(const SubspaceWorld& world, const std::string& path) {
  auto out = open_out(path);
  out << "# subspace world checkpoint\n";
  write_kv(out, "format", std::string("world.v1"));
  write_kv(out, "D", static_cast<long long>(world.ambient_dim));
  write_kv(out, "d", static_cast<long long>(world.latent_dim));
  write_kv(out, "penalty_coef", world.penalty_coef);
  write_kv(out, "label_noise", world.label_noise);
  write_kv(out, "pseudo_noise", world.pseudo_noise);
  write_kv(out, "A", flatten(world.basis));
  write_kv(out, "Sigma", flatten(world.latent_cov));
  write_kv(out, "theta_star", flatten(world.reward_dir.transpose()));
}

SubspaceWorld load_world(const std::string& path) {
  const KvFile kv = KvFile::read(path);
  if (kv.get("format") != "world.v1") fail("not a world checkpoint: " + path);
  SubspaceWorld w;
  w.ambient_dim = static_cast<int>(kv.get_int("D"));
  w.latent_dim = static_cast<int>(kv.get_int("d"));
  w.penalty_coef = kv.get_double("penalty_coef");
  w.label_noise = kv.get_double("label_noise");
  w.pseudo_noise = kv.get_double("pseudo_noise");
  w.basis = unflatten(kv.get_doubles("A"), w.ambient_dim, w.latent_dim, "A");
  w.latent_cov =
      unflatten(kv.get_doubles("Sigma"), w.latent_dim, w.latent_dim, "Sigma");
  w.reward_dir =
      unflatten(kv.get_doubles("theta_star"), 1, w.ambient_dim, "theta_star")
          .row(0)
          .transpose();
  return w;
}

// -------------------------------- estimate --------------------------------

void save_estimate(const LinearRewardEstimate& est, const std::string& path) {
  auto out = open_out(path);
  out << "# linear reward estimate\n";
  write_kv(out, "format", std::string("estimate.v1"));
  write_kv(out, "mode",
           std::string(est.mode == RewardFitMode::Ridge ? "ridge" : "bt_mle"));
  write_kv(out, "lambda", est.lambda);
  write_kv(out, "final_loss", est.final_loss);
  write_kv(out, "iterations", static_cast<long long>(est.iterations));
  write_kv(out, "converged", static_cast<long long>(est.converged ? 1 : 0));
  write_kv(out, "theta_hat", flatten(est.theta_hat.transpose()));
}

LinearRewardEstimate load_estimate(const std::string& path) {
  const KvFile kv = KvFile::read(path);
  if (kv.get("format") != "estimate.v1") fail("not an estimate: " + path);
  LinearRewardEstimate est;
  const std::string mode = kv.get("mode");
  if (mode == "ridge")
    est.mode = RewardFitMode::Ridge;
  else if (mode == "bt_mle")
    est.mode = RewardFitMode::BtMle;
  else
    fail("unknown estimate mode: " + mode);
  est.lambda = kv.get_double("lambda");
  est.final_loss = kv.get_double("final_loss");
  est.iterations = static_cast<int>(kv.get_int("iterations"));
  est.converged = kv.get_int("converged") != 0;
  const auto th = kv.get_doubles("theta_hat");
  est.theta_hat = unflatten(th, 1, static_cast<Eigen::Index>(th.size()),
                            "theta_hat")
                      .row(0)
                      .transpose();
  return est;
}

// --------------------------------- model ----------------------------------

void save_model(const ScoreModel& model, const std::string& path) {
  auto out = open_out(path);
  out << "# conditional score model checkpoint\n";
  write_kv(out, "format", std::string("score_model.v1"));
  write_kv(out, "D", static_cast<long long>(model.ambient_dim()));
  write_kv(out, "d", static_cast<long long>(model.latent_dim()));
  write_kv(out, "T", model.schedule().terminal);
  write_kv(out, "t0", model.schedule().early_stop);
  write_kv(out, "eta", model.schedule().step);
  write_kv(out, "nu_hat", model.head_noise());
  write_kv(out, "log_nu_hat", model.head_log_noise());
  write_kv(out, "V", flatten(model.encoder()));
  write_kv(out, "L", flatten(model.head_factor()));
  write_kv(out, "b_hat", flatten(model.head_dir().transpose()));
}

ScoreModel load_model(const std::string& path) {
  const KvFile kv = KvFile::read(path);
  if (kv.get("format") != "score_model.v1") fail("not a score model: " + path);
  const int D = static_cast<int>(kv.get_int("D"));
  const int d = static_cast<int>(kv.get_int("d"));
  const DiffusionSchedule sched = make_schedule(
      kv.get_double("T"), kv.get_double("t0"), kv.get_double("eta"));
  const Mat v = unflatten(kv.get_doubles("V"), D, d, "V");
  const Mat l = unflatten(kv.get_doubles("L"), d, d, "L");
  const Vec b =
      unflatten(kv.get_doubles("b_hat"), 1, d, "b_hat").row(0).transpose();
  return ScoreModel::from_checkpoint(v, l, b, kv.get_double("log_nu_hat"),
                                     sched);
}

// ------------------------------- datasets ---------------------------------

void save_points_csv(const RowMat& points, const std::string& path) {
  auto out = open_out(path);
  write_header(out, point_header(static_cast<int>(points.cols()), "x"));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j) out << ',';
      out << format_double(points(i, j));
    }
    out << '\n';
  }
}

RowMat load_points_csv(const std::string& path) {
  const Csv csv = Csv::read(path);
  const int D = static_cast<int>(csv.header.size());
  expect_header(csv, point_header(D, "x"), path);
  RowMat points(static_cast<Eigen::Index>(csv.rows.size()), D);
  for (std::size_t i = 0; i < csv.rows.size(); ++i)
    for (int j = 0; j < D; ++j)
      points(static_cast<Eigen::Index>(i), j) = csv.rows[i][static_cast<std::size_t>(j)];
  return points;
}

void save_labeled_csv(const LabeledSet& data, const std::string& path) {
  auto out = open_out(path);
  auto h = point_header(static_cast<int>(data.points.cols()), "x");
  h.push_back("y");
  write_header(out, h);
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points.cols(); ++j)
      out << format_double(data.points(i, j)) << ',';
    out << format_double(data.labels[i]) << '\n';
  }
}

LabeledSet load_labeled_csv(const std::string& path) {
  const Csv csv = Csv::read(path);
  const int D = static_cast<int>(csv.header.size()) - 1;
  auto want = point_header(D, "x");
  want.push_back("y");
  expect_header(csv, want, path);
  LabeledSet data;
  data.points.resize(static_cast<Eigen::Index>(csv.rows.size()), D);
  data.labels.resize(static_cast<Eigen::Index>(csv.rows.size()));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (int j = 0; j < D; ++j)
      data.points(static_cast<Eigen::Index>(i), j) = csv.rows[i][static_cast<std::size_t>(j)];
    data.labels[static_cast<Eigen::Index>(i)] = csv.rows[i][static_cast<std::size_t>(D)];
  }
  return data;
}

void save_preferences_csv(const PreferenceSet& data, const std::string& path) {
  auto out = open_out(path);
  const int D = static_cast<int>(data.first.cols());
  auto h = point_header(D, "x1");
  const auto h2 = point_header(D, "x2");
  h.insert(h.end(), h2.begin(), h2.end());
  h.push_back("u");
  write_header(out, h);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int j = 0; j < D; ++j) out << format_double(data.first(i, j)) << ',';
    for (int j = 0; j < D; ++j) out << format_double(data.second(i, j)) << ',';
    out << data.winner[i] << '\n';
  }
}

PreferenceSet load_preferences_csv(const std::string& path) {
  const Csv csv = Csv::read(path);
  if (csv.header.size() < 3 || (csv.header.size() - 1) % 2 != 0)
    fail("unexpected csv header in " + path);
  const int D = static_cast<int>((csv.header.size() - 1) / 2);
  auto want = point_header(D, "x1");
  const auto h2 = point_header(D, "x2");
  want.insert(want.end(), h2.begin(), h2.end());
  want.push_back("u");
  expect_header(csv, want, path);
  PreferenceSet data;
  const auto n = static_cast<Eigen::Index>(csv.rows.size());
  data.first.resize(n, D);
  data.second.resize(n, D);
  data.winner.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = csv.rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < D; ++j) {
      data.first(i, j) = row[static_cast<std::size_t>(j)];
      data.second(i, j) = row[static_cast<std::size_t>(D + j)];
    }
    const double u = row[static_cast<std::size_t>(2 * D)];
    if (u != 0.0 && u != 1.0) fail("preference winner must be 0 or 1");
    data.winner[i] = static_cast<int>(u);
  }
  return data;
}

void save_pseudo_csv(const PseudoLabeledSet& data, const std::string& path) {
  auto out = open_out(path);
  auto h = point_header(static_cast<int>(data.points.cols()), "x");
  h.push_back("y_hat");
  write_header(out, h);
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points.cols(); ++j)
      out << format_double(data.points(i, j)) << ',';
    out << format_double(data.pseudo_labels[i]) << '\n';
  }
}

PseudoLabeledSet load_pseudo_csv(const std::string& path) {
  const Csv csv = Csv::read(path);
  const int D = static_cast<int>(csv.header.size()) - 1;
  auto want = point_header(D, "x");
  want.push_back("y_hat");
  expect_header(csv, want, path);
  PseudoLabeledSet data;
  data.points.resize(static_cast<Eigen::Index>(csv.rows.size()), D);
  data.pseudo_labels.resize(static_cast<Eigen::Index>(csv.rows.size()));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (int j = 0; j < D; ++j)
      data.points(static_cast<Eigen::Index>(i), j) = csv.rows[i][static_cast<std::size_t>(j)];
    data.pseudo_labels[static_cast<Eigen::Index>(i)] = csv.rows[i][static_cast<std::size_t>(D)];
  }
  return data;
}

// -------------------------------- reports ---------------------------------

const char* const kReportHeader =
    "target_a,mean_reward,suboptimality,E1_est,E2_est,E3_est,subspace_angle,"
    "off_support_dev,shift_trace_ridge,shift_trace_pref,m_of_a,n1,n2,seed";

void save_reports_csv(const std::vector<EvalReport>& reports,
                      const std::string& path) {
  auto out = open_out(path);
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    out << format_double(r.target_a) << ',' << format_double(r.mean_reward)
        << ',' << format_double(r.suboptimality) << ','
        << format_double(r.E1_est) << ',' << format_double(r.E2_est) << ','
        << format_double(r.E3_est) << ',' << format_double(r.subspace_angle)
        << ',' << format_double(r.off_support_dev) << ','
        << format_double(r.shift_trace_ridge) << ','
        << format_double(r.shift_trace_pref) << ',' << format_double(r.m_of_a)
        << ',' << r.n1 << ',' << r.n2 << ',' << r.seed << '\n';
  }
}

std::vector<EvalReport> load_reports_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) fail("empty report csv: " + path);
  if (line != kReportHeader) fail("unexpected report header in " + path);
  std::vector<EvalReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 14) fail("ragged report row in " + path);
    EvalReport r;
    r.target_a = std::strtod(cells[0].c_str(), nullptr);
    r.mean_reward = std::strtod(cells[1].c_str(), nullptr);
    r.suboptimality = std::strtod(cells[2].c_str(), nullptr);
    r.E1_est = std::strtod(cells[3].c_str(), nullptr);
    r.E2_est = std::strtod(cells[4].c_str(), nullptr);
    r.E3_est = std::strtod(cells[5].c_str(), nullptr);
    r.subspace_angle = std::strtod(cells[6].c_str(), nullptr);
    r.off_support_dev = std::strtod(cells[7].c_str(), nullptr);
    r.shift_trace_ridge = std::strtod(cells[8].c_str(), nullptr);
    r.shift_trace_pref = std::strtod(cells[9].c_str(), nullptr);
    r.m_of_a = std::strtod(cells[10].c_str(), nullptr);
    r.n1 = std::stoll(cells[11]);
    r.n2 = std::stoll(cells[12]);
    r.seed = std::stoull(cells[13]);
    out.push_back(r);
  }
  return out;
}

void save_reports_json(const std::vector<EvalReport>& reports,
                       const std::string& path) {
  json arr = json::array();
  for (const auto& r : reports) {
    arr.push_back(json{{"target_a", r.target_a},
                       {"mean_reward", r.mean_reward},
                       {"suboptimality", r.suboptimality},
                       {"E1_est", r.E1_est},
                       {"E2_est", r.E2_est},
                       {"E3_est", r.E3_est},
                       {"subspace_angle", r.subspace_angle},
                       {"off_support_dev", r.off_support_dev},
                       {"shift_trace_ridge", r.shift_trace_ridge},
                       {"shift_trace_pref", r.shift_trace_pref},
                       {"m_of_a", r.m_of_a},
                       {"n1", r.n1},
                       {"n2", r.n2},
                       {"seed", r.seed}});
  }
  auto out = open_out(path);
  out << arr.dump(2) << '\n';
}

std::vector<EvalReport> load_reports_json(const std::string& path) {
  auto in = open_in(path);
  json arr = json::parse(in);
  if (!arr.is_array()) fail("report json must be an array");
  std::vector<EvalReport> out;
  for (const auto& j : arr) {
    EvalReport r;
    r.target_a = j.at("target_a").get<double>();
    r.mean_reward = j.at("mean_reward").get<double>();
    r.suboptimality = j.at("suboptimality").get<double>();
    r.E1_est = j.at("E1_est").get<double>();
    r.E2_est = j.at("E2_est").get<double>();
    r.E3_est = j.at("E3_est").get<double>();
    r.subspace_angle = j.at("subspace_angle").get<double>();
    r.off_support_dev = j.at("off_support_dev").get<double>();
    r.shift_trace_ridge = j.at("shift_trace_ridge").get<double>();
    r.shift_trace_pref = j.at("shift_trace_pref").get<double>();
    r.m_of_a = j.at("m_of_a").get<double>();
    r.n1 = j.at("n1").get<std::int64_t>();
    r.n2 = j.at("n2").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    out.push_back(r);
  }
  return out;
}

}  // namespace diffopt::io
