#pragma once

#include <string>
#include <vector>

#include "diffopt/datasets.hpp"
#include "diffopt/metrics.hpp"
#include "diffopt/reward.hpp"
#include "diffopt/schedule.hpp"
#include "diffopt/score_model.hpp"
#include "diffopt/types.hpp"
#include "diffopt/world.hpp"

// Flat "key = value" text checkpoints (full double precision, one key per
// line, matrices flattened row-major) and CSV import/export. Every writer
// here round-trips exactly: doubles are printed with 17 significant digits.
namespace diffopt::io {

std::string format_double(double v);

void save_world(const SubspaceWorld& world, const std::string& path);
SubspaceWorld load_world(const std::string& path);

void save_estimate(const LinearRewardEstimate& est, const std::string& path);
LinearRewardEstimate load_estimate(const std::string& path);

void save_model(const ScoreModel& model, const std::string& path);
ScoreModel load_model(const std::string& path);

// CSV headers:
//   points:      x_0,...,x_{D-1}
//   labeled:     x_0,...,x_{D-1},y
//   preferences: x1_0,...,x1_{D-1},x2_0,...,x2_{D-1},u
//   pseudo:      x_0,...,x_{D-1},y_hat
void save_points_csv(const RowMat& points, const std::string& path);
RowMat load_points_csv(const std::string& path);

void save_labeled_csv(const LabeledSet& data, const std::string& path);
LabeledSet load_labeled_csv(const std::string& path);

void save_preferences_csv(const PreferenceSet& data, const std::string& path);
PreferenceSet load_preferences_csv(const std::string& path);

void save_pseudo_csv(const PseudoLabeledSet& data, const std::string& path);
PseudoLabeledSet load_pseudo_csv(const std::string& path);

// EvalReport table. The CSV header lists the EvalReport fields verbatim; the
// JSON export is an array of objects mirroring the field names.
extern const char* const kReportHeader;
void save_reports_csv(const std::vector<EvalReport>& reports,
                      const std::string& path);
std::vector<EvalReport> load_reports_csv(const std::string& path);
void save_reports_json(const std::vector<EvalReport>& reports,
                       const std::string& path);
std::vector<EvalReport> load_reports_json(const std::string& path);

}  // namespace diffopt::io
