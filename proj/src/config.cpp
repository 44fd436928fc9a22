#include "diffopt/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "diffopt/io.hpp"
#include "diffopt/schedule.hpp"

namespace diffopt {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  return x;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

double ExperimentConfig::resolved_pseudo_noise() const {
  return pseudo_noise < 0.0 ? 1.0 / std::sqrt(static_cast<double>(D))
                            : pseudo_noise;
}

double ExperimentConfig::resolved_t0() const {
  return t0 < 0.0 ? default_t0(D, d, n1) : t0;
}

void ExperimentConfig::validate() const {
  if (d < 1 || d > D)
    throw std::invalid_argument("config: need 1 <= d <= D");
  if (penalty_coef < 0.0)
    throw std::invalid_argument("config: penalty_coef must be >= 0");
  if (label_noise < 0.0)
    throw std::invalid_argument("config: label_noise must be >= 0");
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("config: n1 and n2 must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("config: bad lambda");
  if (samples_per_target < 1)
    throw std::invalid_argument("config: samples_per_target must be positive");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  if (train_iters < 0 || train_batch < 1 || train_t_samples < 1)
    throw std::invalid_argument("config: bad training options");
  if (integrator != "exponential" && integrator != "euler")
    throw std::invalid_argument("config: integrator must be exponential|euler");
  if (eval_ref_samples < 2)
    throw std::invalid_argument("config: eval_ref_samples must be >= 2");
  if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
  // Schedule coherence (throws on violations).
  make_schedule(T, resolved_t0(), eta);
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "D") cfg.D = static_cast<int>(parse_int(key, value));
  else if (key == "d") cfg.d = static_cast<int>(parse_int(key, value));
  else if (key == "penalty_coef") cfg.penalty_coef = parse_double(key, value);
  else if (key == "label_noise") cfg.label_noise = parse_double(key, value);
  else if (key == "pseudo_noise")
    cfg.pseudo_noise = value == "auto" ? -1.0 : parse_double(key, value);
  else if (key == "n1") cfg.n1 = parse_int(key, value);
  else if (key == "n2") cfg.n2 = parse_int(key, value);
  else if (key == "supervision") {
    if (value == "labels") cfg.supervision = Supervision::Labels;
    else if (value == "preferences") cfg.supervision = Supervision::Preferences;
    else throw std::invalid_argument("config: supervision must be labels|preferences");
  } else if (key == "score_source") {
    if (value == "oracle") cfg.score_source = ScoreSource::Oracle;
    else if (value == "learned") cfg.score_source = ScoreSource::Learned;
    else throw std::invalid_argument("config: score_source must be oracle|learned");
  } else if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "bt_step") cfg.bt_step = parse_double(key, value);
  else if (key == "bt_tol") cfg.bt_tol = parse_double(key, value);
  else if (key == "bt_max_iters")
    cfg.bt_max_iters = static_cast<int>(parse_int(key, value));
  else if (key == "T") cfg.T = parse_double(key, value);
  else if (key == "t0")
    cfg.t0 = value == "auto" ? -1.0 : parse_double(key, value);
  else if (key == "eta") cfg.eta = parse_double(key, value);
  else if (key == "targets") {
    cfg.targets.clear();
    for (const auto& s : split_list(value))
      cfg.targets.push_back(parse_double(key, s));
  } else if (key == "samples_per_target")
    cfg.samples_per_target = static_cast<int>(parse_int(key, value));
  else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& s : split_list(value))
      cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, s)));
  } else if (key == "world_seed")
    cfg.world_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "train_iters")
    cfg.train_iters = static_cast<int>(parse_int(key, value));
  else if (key == "train_batch")
    cfg.train_batch = static_cast<int>(parse_int(key, value));
  else if (key == "train_t_samples")
    cfg.train_t_samples = static_cast<int>(parse_int(key, value));
  else if (key == "train_lr") cfg.train_lr = parse_double(key, value);
  else if (key == "integrator") cfg.integrator = value;
  else if (key == "eval_ref_samples")
    cfg.eval_ref_samples = static_cast<int>(parse_int(key, value));
  else if (key == "jobs") cfg.jobs = static_cast<int>(parse_int(key, value));
  else if (key == "out_prefix") cfg.out_prefix = value;
  else throw std::invalid_argument("config: unknown key: " + key);
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: malformed line: " + line);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "D = " << cfg.D << "\n";
  out << "d = " << cfg.d << "\n";
  out << "penalty_coef = " << io::format_double(cfg.penalty_coef) << "\n";
  out << "label_noise = " << io::format_double(cfg.label_noise) << "\n";
  out << "pseudo_noise = " << io::format_double(cfg.resolved_pseudo_noise())
      << "\n";
  out << "n1 = " << cfg.n1 << "\n";
  out << "n2 = " << cfg.n2 << "\n";
  out << "supervision = "
      << (cfg.supervision == Supervision::Labels ? "labels" : "preferences")
      << "\n";
  out << "score_source = "
      << (cfg.score_source == ScoreSource::Oracle ? "oracle" : "learned")
      << "\n";
  out << "lambda = " << io::format_double(cfg.lambda) << "\n";
  out << "bt_step = " << io::format_double(cfg.bt_step) << "\n";
  out << "bt_tol = " << io::format_double(cfg.bt_tol) << "\n";
  out << "bt_max_iters = " << cfg.bt_max_iters << "\n";
  out << "T = " << io::format_double(cfg.T) << "\n";
  out << "t0 = " << io::format_double(cfg.resolved_t0()) << "\n";
  out << "eta = " << io::format_double(cfg.eta) << "\n";
  out << "targets =";
  for (double a : cfg.targets) out << ' ' << io::format_double(a);
  out << "\n";
  out << "samples_per_target = " << cfg.samples_per_target << "\n";
  out << "seeds =";
  for (auto s : cfg.seeds) out << ' ' << s;
  out << "\n";
  out << "world_seed = " << cfg.world_seed << "\n";
  out << "train_iters = " << cfg.train_iters << "\n";
  out << "train_batch = " << cfg.train_batch << "\n";
  out << "train_t_samples = " << cfg.train_t_samples << "\n";
  out << "train_lr = " << io::format_double(cfg.train_lr) << "\n";
  out << "integrator = " << cfg.integrator << "\n";
  out << "eval_ref_samples = " << cfg.eval_ref_samples << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  out << "out_prefix = " << cfg.out_prefix << "\n";
  return out.str();
}

}  // namespace diffopt
