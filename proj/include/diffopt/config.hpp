#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace diffopt {

enum class Supervision { Labels, Preferences };
enum class ScoreSource { Oracle, Learned };

// Flat experiment configuration. Files are "key = value" lines; unknown keys
// are errors. t0 and pseudo_noise accept the literal "auto", which resolves
// to the default early-stopping rule and 1/sqrt(D) respectively.
struct ExperimentConfig {
  int D = 64;
  int d = 16;
  double penalty_coef = 5.0;
  double label_noise = 0.1;
  double pseudo_noise = -1.0;  // < 0 means auto (1/sqrt(D))
  std::int64_t n1 = 65536;
  std::int64_t n2 = 8192;
  Supervision supervision = Supervision::Labels;
  ScoreSource score_source = ScoreSource::Learned;
  double lambda = 1.0;
  double bt_step = 1.0;
  double bt_tol = 1e-8;
  int bt_max_iters = 10000;
  double T = 10.0;
  double t0 = -1.0;  // < 0 means auto (default_t0)
  double eta = 5e-3;
  std::vector<double> targets = {0, 1, 2, 4, 6, 8, 12, 16};
  int samples_per_target = 2048;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::uint64_t world_seed = 7;
  int train_iters = 20000;
  int train_batch = 128;
  int train_t_samples = 4;
  double train_lr = 1e-2;
  std::string integrator = "exponential";  // or "euler"
  int eval_ref_samples = 4096;             // reference draws for decompose
  int jobs = 1;
  std::string out_prefix = "results";

  double resolved_pseudo_noise() const;
  double resolved_t0() const;
  void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);

// Applies "key=value" overrides on top of cfg; unknown keys are errors.
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Resolved key=value text (what the sidecar records).
std::string render_config(const ExperimentConfig& cfg);

}  // namespace diffopt
