#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scnn/batch.hpp"
#include "scnn/regressor.hpp"
#include "scnn/switch_classifier.hpp"

namespace scnn {

/// Hyperparameters for the staged training run. Each stage stops at the
/// earlier of its epoch cap and the plateau rule: validation MAE failing to
/// improve by more than plateau_min_delta for plateau_patience consecutive
/// epochs.
struct TrainConfig {
  int t_pretrain = 50;
  int t_differential = 50;
  int t_coupled = 50;
  int plateau_patience = 5;
  double plateau_min_delta = 0.1;
  double lr = 1e-5;
  double momentum = 0.9;
  double switch_lr = 0.0;  // 0: use lr
  double init_std = 0.01;  // Gaussian weight init scale
  bool balance_undersample = false;
  SwitchBackbone switch_backbone = SwitchBackbone::kCnnSmall;
  uint64_t seed = 0;

  double effective_switch_lr() const { return switch_lr > 0.0 ? switch_lr : lr; }
  void validate() const;
};

/// Deterministic per-purpose seed stream derivation (splitmix64 over the base
/// seed, a tag hash, and an index).
uint64_t derive_seed(uint64_t base, const char* tag, uint64_t index = 0);

/// Plateau detection over a validation series.
struct PlateauTracker {
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  /// Feed one epoch's validation value; true means stop after this epoch.
  bool should_stop(double value, double min_delta, int patience) {
    if (value < best - min_delta) {
      best = value;
      stale = 0;
    } else {
      ++stale;
    }
    return stale >= patience;
  }
};

struct BestLabel {
  int label = 0;      // 1-based regressor index
  double error = 0.0; // minimized absolute count error
};

/// argmin_k |counts[k] - gt_count|; ties break toward the lowest index.
/// Throws on a non-finite count.
BestLabel best_label(const std::vector<double>& counts, double gt_count);

/// Per-patch routing labels (1-based) with their best count errors.
struct RoutingLabels {
  std::vector<int> labels;
  std::vector<double> errors;
};

struct EpochRecord {
  std::string stage;
  int epoch = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double switch_accuracy = std::numeric_limits<double>::quiet_NaN();
  double e_c = std::numeric_limits<double>::quiet_NaN();
};
using TrainLog = std::vector<EpochRecord>;

/// Tab-separated, one row per epoch, header first. No timestamps.
void write_train_log(const std::string& path, const TrainLog& log);
std::string train_log_to_tsv(const TrainLog& log);

/// ROI-masked predicted counts of every regressor on one patch.
std::vector<double> regressor_counts(std::vector<Regressor>& regs, const TrainingBatch& b);

/// Fresh-forward routing labels over a batch list.
RoutingLabels compute_routing_labels(std::vector<Regressor>& regs,
                                     const std::vector<TrainingBatch>& batches);

/// Mean over patches of the per-patch minimum absolute count error: the count
/// error achievable with perfect routing. Throws on an empty dataset.
double minimal_achievable_mae(std::vector<Regressor>& regs,
                              const std::vector<TrainingBatch>& batches);

/// Same statistic from precomputed per-patch per-regressor counts.
double minimal_achievable_mae(const std::vector<std::vector<double>>& per_patch_counts,
                              const std::vector<double>& gt_counts);

/// One SGD step on one patch (batch size 1), ROI-masked L2 loss. Returns the loss.
double regressor_train_step(Regressor& reg, const TrainingBatch& b, double lr, double momentum);

/// Patch-level count MAE of one regressor.
double validation_mae_single(Regressor& reg, const std::vector<TrainingBatch>& val);

/// Patch-level count MAE with each patch routed by the switch argmax.
double validation_mae_switch_routed(std::vector<Regressor>& regs, SwitchClassifier& sw,
                                    const std::vector<TrainingBatch>& val);

using StepHook = std::function<void(size_t patch_index, int chosen_label)>;
using PhaseHook = std::function<void(const std::string& phase, int epoch)>;

/// Stage 1: trains each regressor independently on all patches. Regressors
/// run concurrently (disjoint models). Returns per-epoch history.
TrainLog pretrain(std::vector<Regressor>& regs, const std::vector<TrainingBatch>& train,
                  const std::vector<TrainingBatch>& val, const TrainConfig& cfg);

struct DifferentialEpochStats {
  double mean_loss = 0.0;
  double mean_best_error = 0.0;  // online estimate (errors measured pre-update)
};

/// One differential epoch over the given patch order: per patch, forward all
/// regressors, backpropagate only the argmin-count-error one.
DifferentialEpochStats differential_epoch(std::vector<Regressor>& regs,
                                          const std::vector<TrainingBatch>& train,
                                          const std::vector<size_t>& order,
                                          const TrainConfig& cfg, const StepHook& hook = {});

/// Stage 2 loop; returns routing labels recomputed with the final parameters.
RoutingLabels differential_train(std::vector<Regressor>& regs,
                                 const std::vector<TrainingBatch>& train,
                                 const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                                 TrainLog* log = nullptr, const StepHook& hook = {});

/// Class-balanced (patch index, label) multiset. Smaller classes are
/// oversampled with replacement up to the largest class (or every class
/// downsampled to the smallest when undersample is set). Throws, naming the
/// class, if a class has no members.
std::vector<std::pair<size_t, int>> make_switch_dataset(const RoutingLabels& labels,
                                                        int num_classes, uint64_t seed,
                                                        bool undersample = false);

struct SwitchEpochStats {
  double accuracy = 0.0;  // pre-update argmax vs label
  double mean_loss = 0.0;
};

/// One softmax-cross-entropy epoch over the balanced set (shuffled with rng).
SwitchEpochStats train_switch_epoch(SwitchClassifier& sw,
                                    const std::vector<TrainingBatch>& batches,
                                    const std::vector<std::pair<size_t, int>>& balanced,
                                    double lr, double momentum, std::mt19937_64& rng);

/// Routes a patch to a 1-based regressor label.
using Router = std::function<int(const TrainingBatch& b, size_t index)>;

/// One switched-differential epoch: each patch trains only the routed regressor.
double switched_epoch(std::vector<Regressor>& regs, const std::vector<TrainingBatch>& train,
                      const Router& router, const std::vector<size_t>& order,
                      const TrainConfig& cfg, const StepHook& hook = {});

/// Stage 3: per epoch, recompute labels on the current regressors, balance and
/// train the switch for one epoch, then run switched-differential training.
/// Stops on the epoch cap or a validation plateau under switch routing.
RoutingLabels coupled_train(std::vector<Regressor>& regs, SwitchClassifier& sw,
                            const std::vector<TrainingBatch>& train,
                            const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                            TrainLog* log = nullptr, const PhaseHook& phase_hook = {},
                            const StepHook& step_hook = {});

/// Ablation: trains the switch on labels held fixed (regressors frozen), same
/// epoch budget and plateau rule as coupled training.
TrainLog standalone_switch_train(std::vector<Regressor>& regs, SwitchClassifier& sw,
                                 const RoutingLabels& fixed_labels,
                                 const std::vector<TrainingBatch>& train,
                                 const std::vector<TrainingBatch>& val, const TrainConfig& cfg);

/// Full staged model: the regressors (a subset is allowed), the switch when
/// more than one regressor is present, and the training history.
struct Pipeline {
  std::vector<Regressor> regressors;
  std::optional<SwitchClassifier> switch_classifier;
  RoutingLabels differential_labels;
  TrainLog log;
};

using StageHook = std::function<void(const std::string& stage, Pipeline&)>;

/// End-to-end staged training: pretrain, differential, coupled. Single-spec
/// runs skip routing stages entirely. on_stage fires after each stage with
/// the current state (checkpointing hook).
Pipeline full_train(const std::vector<RegressorSpec>& specs,
                    const std::vector<TrainingBatch>& train,
                    const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                    const StageHook& on_stage = {});

}  // namespace scnn
