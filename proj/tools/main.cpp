// Command-line front end: every subcommand is a thin wrapper over the
// pipeline stage functions, with intermediates persisted through io::, so a
// staged run reproduces `run` exactly.

#include <cstdio>
#include <exception>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffopt/io.hpp"
#include "diffopt/pipeline.hpp"
#include "diffopt/schedule.hpp"

using namespace diffopt;

namespace {

// Shared config plumbing: --config loads a file, individual --set key=value
// flags override it.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got: " + kv);
      apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

void add_config_flags(CLI::App* app, ConfigArgs& args) {
  app->add_option("--config", args.config_path, "configuration file");
  app->add_option("--set", args.overrides,
                  "override a config key, e.g. --set n1=8192");
}

DiffusionSchedule schedule_of(const ExperimentConfig& cfg) {
  return make_schedule(cfg.T, cfg.resolved_t0(), cfg.eta);
}

int run_world(const ConfigArgs& args, const std::string& out) {
  const ExperimentConfig cfg = args.resolve();
  cfg.validate();
  io::save_world(stage_world(cfg), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_fit(const ConfigArgs& args, const std::string& world_path,
            const std::string& mode, double lambda, double tol,
            std::uint64_t seed, const std::string& data_path,
            const std::string& out) {
  ExperimentConfig cfg = args.resolve();
  if (!mode.empty()) {
    if (mode != "ridge" && mode != "bt")
      throw std::invalid_argument("fit: --mode must be ridge or bt");
    apply_override(cfg, "supervision", mode == "bt" ? "preferences" : "labels");
  }
  if (lambda >= 0.0) cfg.lambda = lambda;
  if (tol > 0.0) cfg.bt_tol = tol;
  cfg.validate();
  const SubspaceWorld world = io::load_world(world_path);

  LabeledSet labeled;
  PreferenceSet prefs;
  if (!data_path.empty()) {
    if (cfg.supervision == Supervision::Labels)
      labeled = io::load_labeled_csv(data_path);
    else
      prefs = io::load_preferences_csv(data_path);
  } else {
    if (cfg.supervision == Supervision::Labels)
      labeled = stage_labeled(cfg, world, seed);
    else
      prefs = stage_preferences(cfg, world, seed);
  }
  const LinearRewardEstimate est = stage_fit(cfg, labeled, prefs);
  io::save_estimate(est, out);
  std::cout << "wrote " << out << " (loss " << est.final_loss << ", "
            << est.iterations << " iterations)\n";
  return 0;
}

int run_pseudo(const ConfigArgs& args, const std::string& world_path,
               const std::string& estimate_path, std::uint64_t seed,
               const std::string& out) {
  const ExperimentConfig cfg = args.resolve();
  cfg.validate();
  const SubspaceWorld world = io::load_world(world_path);
  const LinearRewardEstimate est = io::load_estimate(estimate_path);
  io::save_pseudo_csv(stage_pseudo(cfg, world, est, seed), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_train(const ConfigArgs& args, const std::string& data_path,
              std::uint64_t seed, const std::string& out) {
  const ExperimentConfig cfg = args.resolve();
  cfg.validate();
  const PseudoLabeledSet data = io::load_pseudo_csv(data_path);
  const ScoreModel model = stage_train(cfg, data, seed);
  io::save_model(model, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_generate(const ConfigArgs& args, const std::string& score_spec,
                 const std::string& world_path,
                 const std::string& estimate_path, double target, int n,
                 std::uint64_t seed, int target_index,
                 const std::string& out) {
  ExperimentConfig cfg = args.resolve();
  if (n > 0) cfg.samples_per_target = n;
  cfg.validate();

  std::unique_ptr<ConditionalScore> score;
  std::string source;
  if (score_spec == "oracle") {
    const SubspaceWorld world = io::load_world(world_path);
    const LinearRewardEstimate est = io::load_estimate(estimate_path);
    score = std::make_unique<OracleScore>(world, est.theta_hat,
                                          cfg.resolved_pseudo_noise());
    source = "oracle";
  } else if (score_spec.rfind("ckpt:", 0) == 0) {
    score = std::make_unique<ScoreModel>(
        io::load_model(score_spec.substr(5)));
    source = "learned";
  } else {
    throw std::invalid_argument("--score must be 'oracle' or 'ckpt:PATH'");
  }

  const GenerationRun run =
      stage_generate(cfg, *score, source, target, seed, target_index);
  io::save_points_csv(run.samples, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_eval(const ConfigArgs& args, const std::string& world_path,
             const std::string& estimate_path, const std::string& model_path,
             const std::string& samples_path, double target,
             std::uint64_t seed, int target_index, const std::string& out,
             const std::string& format) {
  const ExperimentConfig cfg = args.resolve();
  cfg.validate();
  const SubspaceWorld world = io::load_world(world_path);
  const LinearRewardEstimate est = io::load_estimate(estimate_path);
  std::unique_ptr<ScoreModel> model;
  if (!model_path.empty())
    model = std::make_unique<ScoreModel>(io::load_model(model_path));

  GenerationRun run;
  run.source = model ? "learned" : "oracle";
  run.target = target;
  run.sched = schedule_of(cfg);
  run.seed = seed;
  run.samples = io::load_points_csv(samples_path);

  const LabeledSet labeled = stage_labeled(cfg, world, seed);
  const PreferenceSet prefs = stage_preferences(cfg, world, seed);
  const EvalReport report = stage_eval(cfg, world, est, labeled, prefs,
                                       model.get(), run, seed, target_index);
  const std::vector<EvalReport> reports = {report};
  if (format == "json")
    io::save_reports_json(reports, out);
  else
    io::save_reports_csv(reports, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_run(const ConfigArgs& args, const std::string& format) {
  const ExperimentConfig cfg = args.resolve();
  cfg.validate();
  const std::vector<EvalReport> reports = run_pipeline(cfg);
  emit(reports, cfg, cfg.out_prefix,
       format == "json" ? EmitFormat::Json : EmitFormat::Csv);
  std::cout << "wrote " << cfg.out_prefix
            << (format == "json" ? ".json" : ".csv") << " (" << reports.size()
            << " rows)\n";
  return 0;
}

int run_sweep(const ConfigArgs& args, const std::string& vary,
              const std::vector<std::string>& values,
              const std::string& format) {
  if (vary.empty() || values.empty())
    throw std::invalid_argument("sweep needs --vary KEY and --values ...");
  const ExperimentConfig base = args.resolve();
  for (const auto& v : values) {
    ExperimentConfig cfg = base;
    apply_override(cfg, vary, v);
    cfg.out_prefix = base.out_prefix + "." + vary + "=" + v;
    cfg.validate();
    const std::vector<EvalReport> reports = run_pipeline(cfg);
    emit(reports, cfg, cfg.out_prefix,
         format == "json" ? EmitFormat::Json : EmitFormat::Csv);
    std::cout << "wrote " << cfg.out_prefix
              << (format == "json" ? ".json" : ".csv") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Reward-directed conditional diffusion laboratory for black-box "
      "optimization over subspace-structured data"};
  app.require_subcommand(1);

  ConfigArgs cfg_args;

  // world
  auto* world_cmd = app.add_subcommand("world", "synthesize and save a world");
  std::string world_out = "world.txt";
  add_config_flags(world_cmd, cfg_args);
  world_cmd->add_option("--out", world_out, "output path");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the reward model");
  std::string fit_world = "world.txt", fit_mode, fit_data,
              fit_out = "estimate.txt";
  double fit_lambda = -1.0, fit_tol = -1.0;
  std::uint64_t fit_seed = 1;
  add_config_flags(fit_cmd, cfg_args);
  fit_cmd->add_option("--world", fit_world, "world checkpoint");
  fit_cmd->add_option("--mode", fit_mode, "ridge|bt");
  fit_cmd->add_option("--lambda", fit_lambda, "ridge regularizer");
  fit_cmd->add_option("--tol", fit_tol, "MLE tolerance");
  fit_cmd->add_option("--seed", fit_seed, "run seed");
  fit_cmd->add_option("--data", fit_data,
                      "labeled/preference CSV (otherwise synthesized)");
  fit_cmd->add_option("--out", fit_out, "output path");

  // pseudo-label
  auto* pseudo_cmd =
      app.add_subcommand("pseudo-label", "annotate fresh unlabeled points");
  std::string pseudo_world = "world.txt", pseudo_est = "estimate.txt",
              pseudo_out = "pseudo.csv";
  std::uint64_t pseudo_seed = 1;
  add_config_flags(pseudo_cmd, cfg_args);
  pseudo_cmd->add_option("--world", pseudo_world, "world checkpoint");
  pseudo_cmd->add_option("--estimate", pseudo_est, "reward estimate");
  pseudo_cmd->add_option("--seed", pseudo_seed, "run seed");
  pseudo_cmd->add_option("--out", pseudo_out, "output path");

  // train-score
  auto* train_cmd =
      app.add_subcommand("train-score", "train the conditional score model");
  std::string train_data = "pseudo.csv", train_out = "model.txt";
  std::uint64_t train_seed = 1;
  add_config_flags(train_cmd, cfg_args);
  train_cmd->add_option("--data", train_data, "pseudo-labeled CSV");
  train_cmd->add_option("--seed", train_seed, "run seed");
  train_cmd->add_option("--out", train_out, "output path");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "sample the backward SDE");
  std::string gen_score = "oracle", gen_world = "world.txt",
              gen_est = "estimate.txt", gen_out = "samples.csv";
  double gen_target = 0.0;
  int gen_n = -1, gen_index = 0;
  std::uint64_t gen_seed = 1;
  add_config_flags(gen_cmd, cfg_args);
  gen_cmd->add_option("--score", gen_score, "oracle | ckpt:PATH");
  gen_cmd->add_option("--world", gen_world, "world checkpoint (oracle mode)");
  gen_cmd->add_option("--estimate", gen_est, "reward estimate (oracle mode)");
  gen_cmd->add_option("--target", gen_target, "target reward value")
      ->required();
  gen_cmd->add_option("--n", gen_n, "samples to generate");
  gen_cmd->add_option("--seed", gen_seed, "run seed");
  gen_cmd->add_option("--target-index", gen_index,
                      "index of the target in the sweep (seed derivation)");
  gen_cmd->add_option("--out", gen_out, "output path");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate generated samples");
  std::string eval_world = "world.txt", eval_est = "estimate.txt", eval_model,
              eval_samples = "samples.csv", eval_out = "report.csv",
              eval_format = "csv";
  double eval_target = 0.0;
  int eval_index = 0;
  std::uint64_t eval_seed = 1;
  add_config_flags(eval_cmd, cfg_args);
  eval_cmd->add_option("--world", eval_world, "world checkpoint");
  eval_cmd->add_option("--estimate", eval_est, "reward estimate");
  eval_cmd->add_option("--model", eval_model,
                       "score checkpoint (for the subspace angle)");
  eval_cmd->add_option("--samples", eval_samples, "generated samples CSV");
  eval_cmd->add_option("--target", eval_target, "target reward value")
      ->required();
  eval_cmd->add_option("--seed", eval_seed, "run seed");
  eval_cmd->add_option("--target-index", eval_index, "sweep index");
  eval_cmd->add_option("--out", eval_out, "output path");
  eval_cmd->add_option("--format", eval_format, "csv|json");

  // run
  auto* run_cmd = app.add_subcommand("run", "full pipeline per config");
  std::string run_format = "csv";
  add_config_flags(run_cmd, cfg_args);
  run_cmd->add_option("--format", run_format, "csv|json");

  // sweep
  auto* sweep_cmd =
      app.add_subcommand("sweep", "repeat `run` over values of one key");
  std::string sweep_vary, sweep_format = "csv";
  std::vector<std::string> sweep_values;
  add_config_flags(sweep_cmd, cfg_args);
  sweep_cmd->add_option("--vary", sweep_vary, "config key to vary");
  sweep_cmd->add_option("--values", sweep_values, "values for the key");
  sweep_cmd->add_option("--format", sweep_format, "csv|json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (world_cmd->parsed()) return run_world(cfg_args, world_out);
    if (fit_cmd->parsed())
      return run_fit(cfg_args, fit_world, fit_mode, fit_lambda, fit_tol,
                     fit_seed, fit_data, fit_out);
    if (pseudo_cmd->parsed())
      return run_pseudo(cfg_args, pseudo_world, pseudo_est, pseudo_seed,
                        pseudo_out);
    if (train_cmd->parsed())
      return run_train(cfg_args, train_data, train_seed, train_out);
    if (gen_cmd->parsed())
      return run_generate(cfg_args, gen_score, gen_world, gen_est, gen_target,
                          gen_n, gen_seed, gen_index, gen_out);
    if (eval_cmd->parsed())
      return run_eval(cfg_args, eval_world, eval_est, eval_model, eval_samples,
                      eval_target, eval_seed, eval_index, eval_out,
                      eval_format);
    if (run_cmd->parsed()) return run_run(cfg_args, run_format);
    if (sweep_cmd->parsed())
      return run_sweep(cfg_args, sweep_vary, sweep_values, sweep_format);
  } catch (const StageError& e) {
    std::cerr << "pipeline failed in stage '" << e.stage << "': " << e.what()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
