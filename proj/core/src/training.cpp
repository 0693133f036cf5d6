#include "scnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace scnn {

void TrainConfig::validate() const {
  if (t_pretrain < 1 || t_differential < 1 || t_coupled < 1)
    throw std::invalid_argument("TrainConfig: epoch caps must be >= 1");
  if (plateau_patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (plateau_min_delta < 0) throw std::invalid_argument("TrainConfig: min_delta must be >= 0");
  if (lr < 0 || momentum < 0 || momentum >= 1)
    throw std::invalid_argument("TrainConfig: bad lr/momentum");
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<size_t> shuffled_order(size_t n, std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}
}  // namespace

uint64_t derive_seed(uint64_t base, const char* tag, uint64_t index) {
  uint64_t h = splitmix64(base);
  for (const char* c = tag; *c; ++c) h = splitmix64(h ^ static_cast<uint64_t>(*c));
  return splitmix64(h ^ index);
}

BestLabel best_label(const std::vector<double>& counts, double gt_count) {
  if (counts.empty()) throw std::invalid_argument("best_label: no counts");
  if (!std::isfinite(gt_count)) throw std::invalid_argument("best_label: non-finite gt count");
  BestLabel best{0, std::numeric_limits<double>::infinity()};
  for (size_t k = 0; k < counts.size(); ++k) {
    if (!std::isfinite(counts[k]))
      throw std::invalid_argument("best_label: non-finite count for regressor " +
                                  std::to_string(k + 1));
    const double err = std::abs(counts[k] - gt_count);
    if (err < best.error) best = {static_cast<int>(k) + 1, err};
  }
  return best;
}

void write_train_log(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create train log " + path);
  out << train_log_to_tsv(log);
}

std::string train_log_to_tsv(const TrainLog& log) {
  std::ostringstream out;
  out << "stage\tepoch\ttrain_loss\tval_mae\tswitch_accuracy\te_c\n";
  out.precision(9);
  for (const EpochRecord& r : log) {
    out << r.stage << "\t" << r.epoch << "\t" << r.train_loss << "\t" << r.val_mae << "\t"
        << r.switch_accuracy << "\t" << r.e_c << "\n";
  }
  return out.str();
}

std::vector<double> regressor_counts(std::vector<Regressor>& regs, const TrainingBatch& b) {
  std::vector<double> counts(regs.size());
  for (size_t k = 0; k < regs.size(); ++k) {
    const nn::Tensor<float> out = regs[k].net().forward(b.pixels);
    counts[k] = masked_count(out, b.roi ? &*b.roi : nullptr);
  }
  return counts;
}

RoutingLabels compute_routing_labels(std::vector<Regressor>& regs,
                                     const std::vector<TrainingBatch>& batches) {
  RoutingLabels out;
  out.labels.reserve(batches.size());
  out.errors.reserve(batches.size());
  for (const TrainingBatch& b : batches) {
    const BestLabel bl = best_label(regressor_counts(regs, b), b.gt_count);
    out.labels.push_back(bl.label);
    out.errors.push_back(bl.error);
  }
  return out;
}

double minimal_achievable_mae(std::vector<Regressor>& regs,
                              const std::vector<TrainingBatch>& batches) {
  if (batches.empty()) throw std::invalid_argument("minimal_achievable_mae: empty dataset");
  const RoutingLabels labels = compute_routing_labels(regs, batches);
  double total = 0.0;
  for (double e : labels.errors) total += e;
  return total / static_cast<double>(labels.errors.size());
}

double minimal_achievable_mae(const std::vector<std::vector<double>>& per_patch_counts,
                              const std::vector<double>& gt_counts) {
  if (per_patch_counts.empty()) throw std::invalid_argument("minimal_achievable_mae: empty dataset");
  if (per_patch_counts.size() != gt_counts.size())
    throw std::invalid_argument("minimal_achievable_mae: count/gt length mismatch");
  double total = 0.0;
  for (size_t i = 0; i < per_patch_counts.size(); ++i)
    total += best_label(per_patch_counts[i], gt_counts[i]).error;
  return total / static_cast<double>(per_patch_counts.size());
}

double regressor_train_step(Regressor& reg, const TrainingBatch& b, double lr, double momentum) {
  const nn::Tensor<float> out = reg.net().forward(b.pixels);
  nn::Tensor<float> dout;
  const float loss =
      nn::l2_density_loss(out, b.target_t, 1, b.roi_t ? &*b.roi_t : nullptr, &dout);
  reg.net().zero_grads();
  reg.net().backward(dout);
  nn::sgd_step(reg.net().params(), lr, momentum);
  return loss;
}

double validation_mae_single(Regressor& reg, const std::vector<TrainingBatch>& val) {
  if (val.empty()) throw std::invalid_argument("validation set is empty");
  double total = 0.0;
  for (const TrainingBatch& b : val) {
    const nn::Tensor<float> out = reg.net().forward(b.pixels);
    total += std::abs(masked_count(out, b.roi ? &*b.roi : nullptr) - b.gt_count);
  }
  return total / static_cast<double>(val.size());
}

double validation_mae_switch_routed(std::vector<Regressor>& regs, SwitchClassifier& sw,
                                    const std::vector<TrainingBatch>& val) {
  if (val.empty()) throw std::invalid_argument("validation set is empty");
  double total = 0.0;
  for (const TrainingBatch& b : val) {
    const int label = sw.infer_label(b.switch_pixels);
    Regressor& reg = regs[static_cast<size_t>(label - 1)];
    const nn::Tensor<float> out = reg.net().forward(b.pixels);
    total += std::abs(masked_count(out, b.roi ? &*b.roi : nullptr) - b.gt_count);
  }
  return total / static_cast<double>(val.size());
}

TrainLog pretrain(std::vector<Regressor>& regs, const std::vector<TrainingBatch>& train,
                  const std::vector<TrainingBatch>& val, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty())
    throw std::invalid_argument("pretrain: train and validation sets must be non-empty");

  std::vector<TrainLog> logs(regs.size());
  std::vector<std::exception_ptr> errors(regs.size());

  auto train_one = [&](size_t k) {
    try {
      Regressor& reg = regs[k];
      std::mt19937_64 rng(derive_seed(cfg.seed, "pretrain", k));
      PlateauTracker plateau;
      for (int epoch = 1; epoch <= cfg.t_pretrain; ++epoch) {
        const std::vector<size_t> order = shuffled_order(train.size(), rng);
        double loss_total = 0.0;
        for (size_t idx : order)
          loss_total += regressor_train_step(reg, train[idx], cfg.lr, cfg.momentum);
        reg.epoch += 1;
        const double val_mae = validation_mae_single(reg, val);
        EpochRecord rec;
        rec.stage = "pretrain:" + reg.name();
        rec.epoch = epoch;
        rec.train_loss = loss_total / static_cast<double>(train.size());
        rec.val_mae = val_mae;
        logs[k].push_back(rec);
        if (plateau.should_stop(val_mae, cfg.plateau_min_delta, cfg.plateau_patience)) break;
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  // Disjoint models; one thread each.
  std::vector<std::thread> threads;
  threads.reserve(regs.size());
  for (size_t k = 0; k < regs.size(); ++k) threads.emplace_back(train_one, k);
  for (std::thread& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  TrainLog merged;
  for (const TrainLog& l : logs) merged.insert(merged.end(), l.begin(), l.end());
  return merged;
}

DifferentialEpochStats differential_epoch(std::vector<Regressor>& regs,
                                          const std::vector<TrainingBatch>& train,
                                          const std::vector<size_t>& order,
                                          const TrainConfig& cfg, const StepHook& hook) {
  DifferentialEpochStats stats;
  for (size_t idx : order) {
    const TrainingBatch& b = train[idx];
    // Forward every regressor; the chosen one keeps its activation caches for
    // the backward pass below.
    std::vector<nn::Tensor<float>> outs(regs.size());
    std::vector<double> counts(regs.size());
    for (size_t k = 0; k < regs.size(); ++k) {
      outs[k] = regs[k].net().forward(b.pixels);
      counts[k] = masked_count(outs[k], b.roi ? &*b.roi : nullptr);
    }
    const BestLabel bl = best_label(counts, b.gt_count);
    const size_t chosen = static_cast<size_t>(bl.label - 1);

    nn::Tensor<float> dout;
    const float loss =
        nn::l2_density_loss(outs[chosen], b.target_t, 1, b.roi_t ? &*b.roi_t : nullptr, &dout);
    regs[chosen].net().zero_grads();
    regs[chosen].net().backward(dout);
    nn::sgd_step(regs[chosen].net().params(), cfg.lr, cfg.momentum);

    stats.mean_loss += loss;
    stats.mean_best_error += bl.error;
    if (hook) hook(idx, bl.label);
  }
  if (!order.empty()) {
    stats.mean_loss /= static_cast<double>(order.size());
    stats.mean_best_error /= static_cast<double>(order.size());
  }
  return stats;
}

RoutingLabels differential_train(std::vector<Regressor>& regs,
                                 const std::vector<TrainingBatch>& train,
                                 const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                                 TrainLog* log, const StepHook& hook) {
  cfg.validate();
  if (train.empty() || val.empty())
    throw std::invalid_argument("differential_train: empty dataset");

  std::mt19937_64 rng(derive_seed(cfg.seed, "differential"));
  PlateauTracker plateau;
  for (int epoch = 1; epoch <= cfg.t_differential; ++epoch) {
    const std::vector<size_t> order = shuffled_order(train.size(), rng);
    const DifferentialEpochStats stats = differential_epoch(regs, train, order, cfg, hook);
    for (Regressor& r : regs) r.epoch += 1;
    const double val_mae = minimal_achievable_mae(regs, val);
    if (log) {
      EpochRecord rec;
      rec.stage = "differential";
      rec.epoch = epoch;
      rec.train_loss = stats.mean_loss;
      rec.val_mae = val_mae;
      rec.e_c = stats.mean_best_error;
      log->push_back(rec);
    }
    if (plateau.should_stop(val_mae, cfg.plateau_min_delta, cfg.plateau_patience)) break;
  }
  return compute_routing_labels(regs, train);
}

std::vector<std::pair<size_t, int>> make_switch_dataset(const RoutingLabels& labels,
                                                        int num_classes, uint64_t seed,
                                                        bool undersample) {
  if (num_classes < 1) throw std::invalid_argument("make_switch_dataset: bad class count");
  std::vector<std::vector<size_t>> groups(static_cast<size_t>(num_classes));
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    const int l = labels.labels[i];
    if (l < 1 || l > num_classes)
      throw std::invalid_argument("make_switch_dataset: label out of range");
    groups[static_cast<size_t>(l - 1)].push_back(i);
  }
  for (int c = 0; c < num_classes; ++c) {
    if (groups[static_cast<size_t>(c)].empty())
      throw std::runtime_error("make_switch_dataset: class " + std::to_string(c + 1) +
                               " has no members");
  }

  size_t target = 0;
  if (undersample) {
    target = groups[0].size();
    for (const auto& g : groups) target = std::min(target, g.size());
  } else {
    for (const auto& g : groups) target = std::max(target, g.size());
  }

  std::mt19937_64 rng(seed);
  std::vector<std::pair<size_t, int>> out;
  out.reserve(target * static_cast<size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    const auto& g = groups[static_cast<size_t>(c)];
    if (g.size() <= target) {
      for (size_t idx : g) out.emplace_back(idx, c + 1);
      // Oversample with replacement up to the target.
      std::uniform_int_distribution<size_t> pick(0, g.size() - 1);
      for (size_t i = g.size(); i < target; ++i) out.emplace_back(g[pick(rng)], c + 1);
    } else {
      // Undersample without replacement.
      std::vector<size_t> pool = g;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (size_t i = 0; i < target; ++i) out.emplace_back(pool[i], c + 1);
    }
  }
  return out;
}

SwitchEpochStats train_switch_epoch(SwitchClassifier& sw,
                                    const std::vector<TrainingBatch>& batches,
                                    const std::vector<std::pair<size_t, int>>& balanced,
                                    double lr, double momentum, std::mt19937_64& rng) {
  if (balanced.empty()) throw std::invalid_argument("train_switch_epoch: empty balanced set");
  std::vector<size_t> order = shuffled_order(balanced.size(), rng);
  SwitchEpochStats stats;
  size_t correct_total = 0;
  for (size_t oi : order) {
    const auto& [batch_idx, label] = balanced[oi];
    bool correct = false;
    stats.mean_loss +=
        sw.train_step(batches[batch_idx].switch_pixels, label, lr, momentum, &correct);
    correct_total += correct ? 1 : 0;
  }
  sw.epoch += 1;
  stats.mean_loss /= static_cast<double>(balanced.size());
  stats.accuracy = static_cast<double>(correct_total) / static_cast<double>(balanced.size());
  return stats;
}

double switched_epoch(std::vector<Regressor>& regs, const std::vector<TrainingBatch>& train,
                      const Router& router, const std::vector<size_t>& order,
                      const TrainConfig& cfg, const StepHook& hook) {
  double loss_total = 0.0;
  for (size_t idx : order) {
    const TrainingBatch& b = train[idx];
    const int label = router(b, idx);
    if (label < 1 || label > static_cast<int>(regs.size()))
      throw std::out_of_range("switched_epoch: routed label out of range");
    loss_total += regressor_train_step(regs[static_cast<size_t>(label - 1)], b, cfg.lr,
                                       cfg.momentum);
    if (hook) hook(idx, label);
  }
  return order.empty() ? 0.0 : loss_total / static_cast<double>(order.size());
}

RoutingLabels coupled_train(std::vector<Regressor>& regs, SwitchClassifier& sw,
                            const std::vector<TrainingBatch>& train,
                            const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                            TrainLog* log, const PhaseHook& phase_hook,
                            const StepHook& step_hook) {
  cfg.validate();
  if (train.empty() || val.empty()) throw std::invalid_argument("coupled_train: empty dataset");

  std::mt19937_64 rng(derive_seed(cfg.seed, "coupled"));
  PlateauTracker plateau;
  RoutingLabels labels;
  for (int epoch = 1; epoch <= cfg.t_coupled; ++epoch) {
    // 1. Regenerate switch labels from the current regressors.
    if (phase_hook) phase_hook("labels", epoch);
    labels = compute_routing_labels(regs, train);
    double e_c = 0.0;
    for (double e : labels.errors) e_c += e;
    e_c /= static_cast<double>(labels.errors.size());

    // 2. One epoch of switch training on the balanced set.
    if (phase_hook) phase_hook("switch", epoch);
    const auto balanced =
        make_switch_dataset(labels, sw.num_classes(), rng(), cfg.balance_undersample);
    const SwitchEpochStats sw_stats = train_switch_epoch(
        sw, train, balanced, cfg.effective_switch_lr(), cfg.momentum, rng);

    // 3. Switched differential training routed by the live switch.
    if (phase_hook) phase_hook("switched", epoch);
    const std::vector<size_t> order = shuffled_order(train.size(), rng);
    const Router router = [&sw](const TrainingBatch& b, size_t) {
      return sw.infer_label(b.switch_pixels);
    };
    const double train_loss = switched_epoch(regs, train, router, order, cfg, step_hook);
    for (Regressor& r : regs) r.epoch += 1;

    const double val_mae = validation_mae_switch_routed(regs, sw, val);
    if (log) {
      EpochRecord rec;
      rec.stage = "coupled";
      rec.epoch = epoch;
      rec.train_loss = train_loss;
      rec.val_mae = val_mae;
      rec.switch_accuracy = sw_stats.accuracy;
      rec.e_c = e_c;
      log->push_back(rec);
    }
    if (plateau.should_stop(val_mae, cfg.plateau_min_delta, cfg.plateau_patience)) break;
  }
  return labels;
}

TrainLog standalone_switch_train(std::vector<Regressor>& regs, SwitchClassifier& sw,
                                 const RoutingLabels& fixed_labels,
                                 const std::vector<TrainingBatch>& train,
                                 const std::vector<TrainingBatch>& val,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (fixed_labels.labels.size() != train.size())
    throw std::invalid_argument("standalone_switch_train: label/batch size mismatch");

  std::mt19937_64 rng(derive_seed(cfg.seed, "standalone-switch"));
  PlateauTracker plateau;
  TrainLog log;
  for (int epoch = 1; epoch <= cfg.t_coupled; ++epoch) {
    const auto balanced =
        make_switch_dataset(fixed_labels, sw.num_classes(), rng(), cfg.balance_undersample);
    const SwitchEpochStats stats = train_switch_epoch(
        sw, train, balanced, cfg.effective_switch_lr(), cfg.momentum, rng);
    const double val_mae = validation_mae_switch_routed(regs, sw, val);
    EpochRecord rec;
    rec.stage = "switch-standalone";
    rec.epoch = epoch;
    rec.train_loss = stats.mean_loss;
    rec.val_mae = val_mae;
    rec.switch_accuracy = stats.accuracy;
    log.push_back(rec);
    if (plateau.should_stop(val_mae, cfg.plateau_min_delta, cfg.plateau_patience)) break;
  }
  return log;
}

Pipeline full_train(const std::vector<RegressorSpec>& specs,
                    const std::vector<TrainingBatch>& train,
                    const std::vector<TrainingBatch>& val, const TrainConfig& cfg,
                    const StageHook& on_stage) {
  cfg.validate();
  if (specs.empty()) throw std::invalid_argument("full_train: no regressor specs");
  if (train.empty() || val.empty()) throw std::invalid_argument("full_train: empty dataset");

  Pipeline p;
  p.regressors.reserve(specs.size());
  for (size_t k = 0; k < specs.size(); ++k)
    p.regressors.emplace_back(specs[k], derive_seed(cfg.seed, "init", k), cfg.init_std);

  TrainLog pre_log = pretrain(p.regressors, train, val, cfg);
  p.log.insert(p.log.end(), pre_log.begin(), pre_log.end());
  if (on_stage) on_stage("pretrain", p);

  if (specs.size() == 1) return p;  // no routing to learn

  p.differential_labels = differential_train(p.regressors, train, val, cfg, &p.log);
  if (on_stage) on_stage("differential", p);

  const int input_size = train.front().switch_pixels.height;
  p.switch_classifier.emplace(cfg.switch_backbone, static_cast<int>(specs.size()), input_size,
                              derive_seed(cfg.seed, "switch"), cfg.init_std);
  coupled_train(p.regressors, *p.switch_classifier, train, val, cfg, &p.log);
  if (on_stage) on_stage("coupled", p);
  return p;
}

}  // namespace scnn
