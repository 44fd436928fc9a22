#include "diffopt/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "diffopt/io.hpp"
#include "diffopt/rng.hpp"
#include "diffopt/schedule.hpp"

namespace diffopt {

namespace {

constexpr std::uint64_t kLab = 0x4c414245ull;
constexpr std::uint64_t kPref = 0x50524546ull;
constexpr std::uint64_t kUnlab = 0x554e4c41ull;
constexpr std::uint64_t kPseudo = 0x50534555ull;
constexpr std::uint64_t kTrain = 0x5452414eull;
constexpr std::uint64_t kGen = 0x47454e52ull;
constexpr std::uint64_t kEval = 0x4556414cull;

template <typename F>
auto guarded(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

std::uint64_t labeled_seed(std::uint64_t s) { return derive_seed(s, kLab); }
std::uint64_t preference_seed(std::uint64_t s) { return derive_seed(s, kPref); }
std::uint64_t unlabeled_seed(std::uint64_t s) { return derive_seed(s, kUnlab); }
std::uint64_t pseudo_seed(std::uint64_t s) { return derive_seed(s, kPseudo); }
std::uint64_t train_seed(std::uint64_t s) { return derive_seed(s, kTrain); }
std::uint64_t generate_seed(std::uint64_t s, int j) {
  return derive_seed(s, kGen, static_cast<std::uint64_t>(j));
}
std::uint64_t eval_seed(std::uint64_t s, int j) {
  return derive_seed(s, kEval, static_cast<std::uint64_t>(j));
}

SubspaceWorld stage_world(const ExperimentConfig& cfg) {
  return guarded("world", [&] {
    SubspaceWorld world = make_world(cfg.D, cfg.d, cfg.penalty_coef,
                                     cfg.label_noise, cfg.world_seed);
    world.pseudo_noise = cfg.resolved_pseudo_noise();
    return world;
  });
}

LabeledSet stage_labeled(const ExperimentConfig& cfg,
                         const SubspaceWorld& world, std::uint64_t seed) {
  return guarded("labeled-data", [&] {
    return make_labeled(world, static_cast<int>(cfg.n2), labeled_seed(seed));
  });
}

PreferenceSet stage_preferences(const ExperimentConfig& cfg,
                                const SubspaceWorld& world,
                                std::uint64_t seed) {
  return guarded("preference-data", [&] {
    return make_preferences(world, static_cast<int>(cfg.n2),
                            preference_seed(seed));
  });
}

LinearRewardEstimate stage_fit(const ExperimentConfig& cfg,
                               const LabeledSet& labeled,
                               const PreferenceSet& prefs) {
  return guarded("fit", [&]() -> LinearRewardEstimate {
    if (cfg.supervision == Supervision::Labels)
      return fit_ridge(labeled, cfg.lambda);
    BtFitOptions opts;
    opts.max_iters = cfg.bt_max_iters;
    opts.step = cfg.bt_step;
    opts.tol = cfg.bt_tol;
    return fit_bt_mle(prefs, opts);
  });
}

PseudoLabeledSet stage_pseudo(const ExperimentConfig& cfg,
                              const SubspaceWorld& world,
                              const LinearRewardEstimate& estimate,
                              std::uint64_t seed) {
  return guarded("pseudo-label", [&] {
    const RowMat points =
        sample_latent(world, static_cast<int>(cfg.n1), unlabeled_seed(seed))
            .points;
    return pseudo_label(points, estimate.predictor(),
                        cfg.resolved_pseudo_noise(), pseudo_seed(seed));
  });
}

ScoreModel stage_train(const ExperimentConfig& cfg,
                       const PseudoLabeledSet& pseudo, std::uint64_t seed) {
  return guarded("train-score", [&] {
    const DiffusionSchedule sched =
        make_schedule(cfg.T, cfg.resolved_t0(), cfg.eta);
    TrainOptions opts;
    opts.latent_dim = cfg.d;
    opts.nu0 = cfg.resolved_pseudo_noise();
    opts.iters = cfg.train_iters;
    opts.batch = cfg.train_batch;
    opts.t_samples = cfg.train_t_samples;
    opts.lr = cfg.train_lr;
    opts.seed = train_seed(seed);
    return train_score(pseudo, sched, opts).model;
  });
}

GenerationRun stage_generate(const ExperimentConfig& cfg,
                             const ConditionalScore& score,
                             const std::string& source, double a,
                             std::uint64_t seed, int target_index) {
  return guarded("generate", [&] {
    const DiffusionSchedule sched =
        make_schedule(cfg.T, cfg.resolved_t0(), cfg.eta);
    GenerateOptions opts;
    opts.integrator = cfg.integrator == "euler" ? Integrator::Euler
                                                : Integrator::Exponential;
    return generate(score, source, a, cfg.samples_per_target, sched,
                    generate_seed(seed, target_index), opts);
  });
}

EvalReport stage_eval(const ExperimentConfig& cfg, const SubspaceWorld& world,
                      const LinearRewardEstimate& estimate,
                      const LabeledSet& labeled, const PreferenceSet& prefs,
                      const ScoreModel* model, const GenerationRun& run,
                      std::uint64_t seed, int target_index) {
  return guarded("eval", [&] {
    const OracleScore oracle(world, estimate.theta_hat,
                             cfg.resolved_pseudo_noise());
    const double a = run.target;

    EvalReport r;
    r.target_a = a;
    r.mean_reward = mean_true_reward(run.samples, world);
    r.suboptimality = a - r.mean_reward;

    const Decomposition dec =
        decompose(run, world, estimate, oracle, cfg.eval_ref_samples,
                  eval_seed(seed, target_index));
    r.E1_est = dec.e1;
    r.E2_est = dec.e2;
    r.E3_est = dec.e3;

    r.subspace_angle =
        model ? subspace_angle(model->encoder(), world.basis) : 0.0;
    r.off_support_dev = off_support_deviation(run, world);

    const Mat target_cov = oracle.target_cov(a);
    r.shift_trace_ridge = shift_trace_ridge(labeled, cfg.lambda, target_cov);
    r.shift_trace_pref = shift_trace_pref(prefs, cfg.lambda, target_cov);
    r.m_of_a = oracle.m_of_a(a);
    r.n1 = cfg.n1;
    r.n2 = cfg.n2;
    r.seed = seed;
    return r;
  });
}

std::vector<EvalReport> run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<EvalReport> reports;
  try {
    const SubspaceWorld world = stage_world(cfg);

    for (std::uint64_t seed : cfg.seeds) {
      const LabeledSet labeled = stage_labeled(cfg, world, seed);
      const PreferenceSet prefs = stage_preferences(cfg, world, seed);
      const LinearRewardEstimate estimate = stage_fit(cfg, labeled, prefs);

      std::unique_ptr<ScoreModel> model;
      std::unique_ptr<OracleScore> oracle;
      const ConditionalScore* score = nullptr;
      std::string source;
      if (cfg.score_source == ScoreSource::Learned) {
        const PseudoLabeledSet pseudo = stage_pseudo(cfg, world, estimate, seed);
        model = std::make_unique<ScoreModel>(stage_train(cfg, pseudo, seed));
        score = model.get();
        source = "learned";
      } else {
        oracle = std::make_unique<OracleScore>(world, estimate.theta_hat,
                                               cfg.resolved_pseudo_noise());
        score = oracle.get();
        source = "oracle";
      }

      // Targets are independent cells; each owns its RNG substream, so the
      // reports do not depend on the worker count.
      const int n_targets = static_cast<int>(cfg.targets.size());
      std::vector<EvalReport> cell(static_cast<std::size_t>(n_targets));
      std::vector<std::string> cell_stage(static_cast<std::size_t>(n_targets));
      std::vector<std::string> cell_error(static_cast<std::size_t>(n_targets));
      std::atomic<int> next{0};
      const int workers =
          std::max(1, std::min(cfg.jobs, n_targets > 0 ? n_targets : 1));
      auto work = [&] {
        for (;;) {
          const int j = next.fetch_add(1);
          if (j >= n_targets) return;
          const auto uj = static_cast<std::size_t>(j);
          try {
            const GenerationRun run = stage_generate(
                cfg, *score, source, cfg.targets[uj], seed, j);
            cell[uj] = stage_eval(cfg, world, estimate, labeled, prefs,
                                  model.get(), run, seed, j);
          } catch (const StageError& e) {
            cell_stage[uj] = e.stage;
            cell_error[uj] = e.what();
          }
        }
      };
      if (workers == 1) {
        work();
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
      }
      for (int j = 0; j < n_targets; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (!cell_stage[uj].empty())
          throw StageError(cell_stage[uj], cell_error[uj]);
        reports.push_back(cell[uj]);
      }
    }
  } catch (const StageError& e) {
    io::save_reports_csv(reports, cfg.out_prefix + ".partial.csv");
    std::ofstream marker(cfg.out_prefix + ".FAILED");
    marker << "stage = " << e.stage << "\n";
    marker << "error = " << e.what() << "\n";
    throw;
  }
  return reports;
}

void emit(const std::vector<EvalReport>& reports, const ExperimentConfig& cfg,
          const std::string& prefix, EmitFormat format) {
  if (format == EmitFormat::Csv)
    io::save_reports_csv(reports, prefix + ".csv");
  else
    io::save_reports_json(reports, prefix + ".json");
  std::ofstream sidecar(prefix + ".config.txt");
  if (!sidecar)
    throw std::runtime_error("cannot write sidecar for " + prefix);
  sidecar << "# resolved configuration\n";
  sidecar << "version = " << kVersion << "\n";
  sidecar << render_config(cfg);
}

}  // namespace diffopt
