#pragma once

#include <limits>
#include <string>
#include <vector>

#include "scnn/batch.hpp"
#include "scnn/training.hpp"

namespace scnn {

/// Mean absolute count error over a test sequence.
double mae(const std::vector<double>& preds, const std::vector<double>& gts);

/// Root of the mean squared count error (the conventional robustness metric
/// reported alongside MAE for crowd counting).
double mse(const std::vector<double>& preds, const std::vector<double>& gts);

enum class RoutingMode { kSwitch, kOracle, kSingle };

struct EvalOptions {
  RoutingMode mode = RoutingMode::kSwitch;
  int single_index = 0;  // 0-based regressor index for kSingle
  int workers = 1;       // scenes evaluated concurrently on cloned models
};

struct SceneRecord {
  std::string id;
  double gt_count = 0.0;
  double predicted_count = 0.0;
  std::vector<int> routes;  // 1-based, batch order within the scene
};

struct EvalReport {
  double mae = 0.0;  // scene-level
  double mse = 0.0;  // scene-level
  double patch_mae = 0.0;          // under the active routing
  double ideal_switch_mae = 0.0;   // perfect-routing count error, patch-level
  double switch_accuracy = std::numeric_limits<double>::quiet_NaN();
  size_t num_scenes = 0;
  size_t num_patches = 0;
  std::vector<SceneRecord> scenes;
};

/// Full test procedure: split scenes were prepared up front; per patch the
/// router picks a regressor, per-scene maps are reassembled, and ROI-masked
/// counts feed the metrics. Per-patch best labels are always recomputed, so
/// the report carries the ideal-switch MAE and the switch accuracy alongside
/// the realized metrics. Workers > 1 evaluates scenes concurrently on cloned
/// models with a deterministic ordered reduction.
EvalReport evaluate_model(std::vector<Regressor>& regs, SwitchClassifier* sw,
                          const PreparedDataset& data, const EvalOptions& opts = {});

/// Key-value metrics followed by a per-scene TSV table.
std::string eval_report_to_text(const EvalReport& report);
void write_eval_report(const std::string& path, const EvalReport& report);

/// Fraction of patches whose switch argmax matches the best label recomputed
/// from the current regressors.
double switch_accuracy(SwitchClassifier& sw, const std::vector<TrainingBatch>& batches,
                       std::vector<Regressor>& regs);
double switch_accuracy_with_labels(SwitchClassifier& sw,
                                   const std::vector<TrainingBatch>& batches,
                                   const RoutingLabels& labels);

enum class ClusterMetric { kCount, kInterhead };

/// Rank-tertile baseline labels. Count metric: low thirds go to R1, R2, R3 in
/// order. Inter-head metric: the highest third goes to R1, the lowest to R2,
/// the remainder to R3. Group sizes differ by at most one; ties resolve by
/// original index. Throws when fewer than 3 patches are given.
RoutingLabels cluster_baseline_labels(const std::vector<TrainingBatch>& batches,
                                      ClusterMetric metric);

/// Per-regressor histogram of patch mean inter-head distance.
struct Histogram {
  std::vector<double> edges;                 // bins + 1 ascending
  std::vector<std::vector<size_t>> counts;   // [class][bin]
  std::string to_tsv(const std::vector<std::string>& class_names = {}) const;
};

Histogram multichotomy_histogram(const std::vector<TrainingBatch>& batches,
                                 const std::vector<int>& routes, int num_classes, int bins,
                                 int k = 10);

/// Trains the full staged pipeline on a regressor subset and evaluates it.
/// Single-regressor subsets bypass the switch entirely.
struct SubsetResult {
  Pipeline pipeline;
  EvalReport report;
};
SubsetResult regressor_subset_experiment(const std::vector<RegressorSpec>& subset,
                                         const PreparedDataset& train,
                                         const PreparedDataset& val,
                                         const PreparedDataset& test, const TrainConfig& cfg,
                                         int eval_workers = 1);

}  // namespace scnn
