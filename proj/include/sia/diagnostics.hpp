#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "sia/rollout.hpp"

namespace sia {

enum class CorrelationKind { pearson, spearman };

enum class DegenerateReason { none, constant_entropy, constant_surprisal, too_few_points };
std::string degenerate_reason_to_string(DegenerateReason r);

struct AlignmentResult {
  std::string question_id;
  std::size_t trajectory_index = 0;
  std::optional<double> rho;
  std::size_t n_checkpoints_used = 0;
  std::size_t excluded_pairs = 0; // non-finite surprisal entries dropped pairwise
  DegenerateReason degenerate_reason = DegenerateReason::none;
};

// Correlation across checkpoints between conditional answer entropy and gold
// surprisal. Undefined (with a reason) below 3 finite pairs or at zero
// variance in either series.
AlignmentResult sia_alignment(const EntropyTrajectory& traj,
                              CorrelationKind kind = CorrelationKind::pearson);

struct GroupLabels {
  std::string model_tag;
  std::string dataset_tag;
  std::string training_stage;
  bool operator==(const GroupLabels&) const = default;
  bool operator<(const GroupLabels& o) const {
    return std::tie(model_tag, dataset_tag, training_stage) <
           std::tie(o.model_tag, o.dataset_tag, o.training_stage);
  }
};

struct LabeledAlignment {
  GroupLabels group;
  AlignmentResult result;
};

struct AlignmentTableRow {
  GroupLabels group;
  double mean_rho = 0;
  std::size_t n_defined = 0;
  std::size_t n_undefined = 0;
  double ci_lo = 0;
  double ci_hi = 0;
};

std::vector<AlignmentTableRow> aggregate_alignment(const std::vector<LabeledAlignment>& results,
                                                   std::size_t bootstrap_b = 1000,
                                                   double level = 0.95, std::uint64_t seed = 0);

// mean over trajectories with a defined rho; empty optional when none
std::optional<double> mean_rho(const std::vector<EntropyTrajectory>& trajectories,
                               CorrelationKind kind = CorrelationKind::pearson);

// the fixed reporting grid s in {0.0, 0.05, ..., 1.0}
std::vector<double> default_grid();

// linear interpolation of a trajectory's entropy series at relative position s
double entropy_at(const EntropyTrajectory& traj, double s);

struct GainCurvePoint {
  double s = 0;
  double mean_gain = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::size_t n = 0;
};

struct GainCurve {
  std::vector<GainCurvePoint> correct;
  std::vector<GainCurvePoint> incorrect;
  std::size_t excluded = 0; // |total gain| below min_denominator
};

GainCurve gain_curve(const std::vector<EntropyTrajectory>& trajectories,
                     const std::vector<double>& grid = default_grid(),
                     double min_denominator = 0.05, std::size_t bootstrap_b = 1000,
                     double level = 0.95, std::uint64_t seed = 0);

struct AucPoint {
  double s = 0;
  std::optional<double> auc; // undefined when a class is empty
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
  double ci_lo = 0;
  double ci_hi = 0;
};

// Mann-Whitney AUC with average-rank ties; score = -entropy at s, so lower
// entropy predicts a correct trace.
AucPoint auc_at_prefix(const std::vector<EntropyTrajectory>& trajectories, double s,
                       std::size_t bootstrap_b = 0, double level = 0.95,
                       std::uint64_t seed = 0);

std::vector<AucPoint> auc_curve(const std::vector<EntropyTrajectory>& trajectories,
                                const std::vector<double>& grid = default_grid(),
                                std::size_t bootstrap_b = 1000, double level = 0.95,
                                std::uint64_t seed = 0);

struct SaturationReport {
  bool plateau_detected = false;
  std::size_t onset_checkpoint = 0; // position k where the plateau starts
  double plateau_level = 0;         // nats
  bool rebound_detected = false;
  bool insufficient_checkpoints = false;
};

SaturationReport saturation_detect(const EntropyTrajectory& traj, double tau = 0.05,
                                   std::size_t window = 2);

// percentile bootstrap over question-level values; deterministic under seed
std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::size_t b = 1000,
                                       double level = 0.95, std::uint64_t seed = 0);

// Re-estimates a trace's checkpoints on shuffled prefixes (same N, seeds
// derived from the original identifiers).
EntropyTrajectory evaluate_shuffled_trace(CompletionBackend& backend,
                                          const QuestionInstance& question,
                                          const TraceRecord& trace, std::uint64_t run_seed,
                                          const EstimationOptions& opts);

struct ShuffleAblationRow {
  GroupLabels group;
  double original_mean_rho = 0;
  double shuffled_mean_rho = 0;
  std::size_t n = 0;
};

// --- CSV emission (plot-data contract) --------------------------------------

std::string rho_table_csv(const std::vector<AlignmentTableRow>& rows);
std::string gain_curve_csv(const GainCurve& curve);
std::string auc_curve_csv(const std::vector<AucPoint>& points);
std::string saturation_csv(const std::vector<std::pair<std::string, SaturationReport>>& rows);
std::string shuffle_ablation_csv(const std::vector<ShuffleAblationRow>& rows);

} // namespace sia
