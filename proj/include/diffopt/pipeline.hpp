#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffopt/config.hpp"
#include "diffopt/datasets.hpp"
#include "diffopt/metrics.hpp"
#include "diffopt/oracle.hpp"
#include "diffopt/reward.hpp"
#include "diffopt/sampler.hpp"
#include "diffopt/score_model.hpp"
#include "diffopt/world.hpp"

namespace diffopt {

inline constexpr const char* kVersion = "0.1.0";

// A pipeline stage failed; `stage` names which one.
struct StageError : std::runtime_error {
  std::string stage;
  StageError(std::string stage_name, const std::string& what)
      : std::runtime_error(stage_name + ": " + what),
        stage(std::move(stage_name)) {}
};

// The stages below are exactly what the CLI subcommands call; run_pipeline
// composes them in-memory, so staged execution with persisted intermediates
// reproduces its reports bit-for-bit.
SubspaceWorld stage_world(const ExperimentConfig& cfg);
LabeledSet stage_labeled(const ExperimentConfig& cfg,
                         const SubspaceWorld& world, std::uint64_t seed);
PreferenceSet stage_preferences(const ExperimentConfig& cfg,
                                const SubspaceWorld& world,
                                std::uint64_t seed);
LinearRewardEstimate stage_fit(const ExperimentConfig& cfg,
                               const LabeledSet& labeled,
                               const PreferenceSet& prefs);
PseudoLabeledSet stage_pseudo(const ExperimentConfig& cfg,
                              const SubspaceWorld& world,
                              const LinearRewardEstimate& estimate,
                              std::uint64_t seed);
ScoreModel stage_train(const ExperimentConfig& cfg,
                       const PseudoLabeledSet& pseudo, std::uint64_t seed);
GenerationRun stage_generate(const ExperimentConfig& cfg,
                             const ConditionalScore& score,
                             const std::string& source, double a,
                             std::uint64_t seed, int target_index);
EvalReport stage_eval(const ExperimentConfig& cfg, const SubspaceWorld& world,
                      const LinearRewardEstimate& estimate,
                      const LabeledSet& labeled, const PreferenceSet& prefs,
                      const ScoreModel* model, const GenerationRun& run,
                      std::uint64_t seed, int target_index);

// Derived per-run seeds; exposed so staged CLI execution matches run_pipeline.
std::uint64_t labeled_seed(std::uint64_t run_seed);
std::uint64_t preference_seed(std::uint64_t run_seed);
std::uint64_t unlabeled_seed(std::uint64_t run_seed);
std::uint64_t pseudo_seed(std::uint64_t run_seed);
std::uint64_t train_seed(std::uint64_t run_seed);
std::uint64_t generate_seed(std::uint64_t run_seed, int target_index);
std::uint64_t eval_seed(std::uint64_t run_seed, int target_index);

// Runs reward fitting, pseudo-labeling, score training (skipped for the
// oracle source) and per-target generation plus evaluation, for every
// (seed, target) pair. One report per pair, ordered by seed then target.
// On a stage failure, reports completed so far are persisted to
// <out_prefix>.partial.csv next to a <out_prefix>.FAILED marker naming the
// stage, and the StageError is rethrown.
std::vector<EvalReport> run_pipeline(const ExperimentConfig& cfg);

enum class EmitFormat { Csv, Json };

// Writes <prefix>.csv or <prefix>.json plus a <prefix>.config.txt sidecar
// with the resolved configuration and code version.
void emit(const std::vector<EvalReport>& reports, const ExperimentConfig& cfg,
          const std::string& prefix, EmitFormat format);

}  // namespace diffopt
