#include "scnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace scnn {

double mae(const std::vector<double>& preds, const std::vector<double>& gts) {
  if (preds.size() != gts.size()) throw std::invalid_argument("mae: length mismatch");
  if (preds.empty()) throw std::invalid_argument("mae: empty input");
  double total = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) total += std::abs(preds[i] - gts[i]);
  return total / static_cast<double>(preds.size());
}

double mse(const std::vector<double>& preds, const std::vector<double>& gts) {
  if (preds.size() != gts.size()) throw std::invalid_argument("mse: length mismatch");
  if (preds.empty()) throw std::invalid_argument("mse: empty input");
  double total = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - gts[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(preds.size()));
}

namespace {

struct PatchResult {
  double pred_count = 0.0;
  int route = 0;       // 1-based
  int best = 0;        // 1-based
  double best_error = 0.0;
  int switch_label = 0;  // 0 when no switch
};

// Evaluates the scenes whose indices are congruent to `worker` mod `stride`.
void eval_scenes(std::vector<Regressor>& regs, SwitchClassifier* sw,
                 const PreparedDataset& data, const EvalOptions& opts, size_t worker,
                 size_t stride, std::vector<PatchResult>& results) {
  for (size_t si = worker; si < data.scenes.size(); si += stride) {
    const PreparedScene& scene = data.scenes[si];
    std::map<std::pair<int, int>, DensityMap> routed_maps;
    for (size_t bi : scene.batch_indices) {
      const TrainingBatch& b = data.batches[bi];
      PatchResult& res = results[bi];

      std::vector<nn::Tensor<float>> outs(regs.size());
      std::vector<double> counts(regs.size());
      for (size_t k = 0; k < regs.size(); ++k) {
        outs[k] = regs[k].net().forward(b.pixels);
        counts[k] = masked_count(outs[k], b.roi ? &*b.roi : nullptr);
      }
      const BestLabel bl = best_label(counts, b.gt_count);
      res.best = bl.label;
      res.best_error = bl.error;
      if (sw) res.switch_label = sw->infer_label(b.switch_pixels);

      switch (opts.mode) {
        case RoutingMode::kSwitch:
          if (!sw) throw std::invalid_argument("evaluate_model: switch routing without switch");
          res.route = res.switch_label;
          break;
        case RoutingMode::kOracle:
          res.route = bl.label;
          break;
        case RoutingMode::kSingle:
          if (opts.single_index < 0 || opts.single_index >= static_cast<int>(regs.size()))
            throw std::invalid_argument("evaluate_model: single regressor index out of range");
          res.route = opts.single_index + 1;
          break;
      }
      res.pred_count = counts[static_cast<size_t>(res.route - 1)];

      const nn::Tensor<float>& routed = outs[static_cast<size_t>(res.route - 1)];
      DensityMap dm(routed.height, routed.width);
      for (size_t i = 0; i < routed.data.size(); ++i) dm.values[i] = routed.data[i];
      routed_maps.emplace(std::make_pair(b.grid_row, b.grid_col), std::move(dm));
    }
    // Reassemble to a full-frame map; validates per-cell dimensions.
    (void)assemble_density(routed_maps, data.grid, scene.frame_height, scene.frame_width,
                           data.factor);
  }
}

}  // namespace

EvalReport evaluate_model(std::vector<Regressor>& regs, SwitchClassifier* sw,
                          const PreparedDataset& data, const EvalOptions& opts) {
  if (regs.empty()) throw std::invalid_argument("evaluate_model: no regressors");
  if (data.scenes.empty()) throw std::invalid_argument("evaluate_model: no scenes");
  if (opts.mode == RoutingMode::kSwitch && !sw)
    throw std::invalid_argument("evaluate_model: switch routing requires a switch");

  std::vector<PatchResult> results(data.batches.size());
  const size_t workers =
      std::max<size_t>(1, std::min<size_t>(opts.workers, data.scenes.size()));
  if (workers == 1) {
    eval_scenes(regs, sw, data, opts, 0, 1, results);
  } else {
    // Each worker owns deep clones; results land in disjoint slots.
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          std::vector<Regressor> local_regs = regs;
          SwitchClassifier local_sw;
          if (sw) local_sw = *sw;
          eval_scenes(local_regs, sw ? &local_sw : nullptr, data, opts, w, workers, results);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : threads) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Ordered reduction by scene index.
  EvalReport report;
  report.num_scenes = data.scenes.size();
  report.num_patches = data.batches.size();
  std::vector<double> scene_preds, scene_gts;
  for (const PreparedScene& scene : data.scenes) {
    SceneRecord rec;
    rec.id = scene.id;
    rec.gt_count = scene.gt_count;
    for (size_t bi : scene.batch_indices) {
      rec.predicted_count += results[bi].pred_count;
      rec.routes.push_back(results[bi].route);
    }
    scene_preds.push_back(rec.predicted_count);
    scene_gts.push_back(rec.gt_count);
    report.scenes.push_back(std::move(rec));
  }
  report.mae = mae(scene_preds, scene_gts);
  report.mse = mse(scene_preds, scene_gts);

  double patch_abs = 0.0, ideal = 0.0;
  size_t agree = 0;
  for (size_t bi = 0; bi < results.size(); ++bi) {
    patch_abs += std::abs(results[bi].pred_count - data.batches[bi].gt_count);
    ideal += results[bi].best_error;
    if (sw && results[bi].switch_label == results[bi].best) ++agree;
  }
  report.patch_mae = patch_abs / static_cast<double>(results.size());
  report.ideal_switch_mae = ideal / static_cast<double>(results.size());
  if (sw) report.switch_accuracy = static_cast<double>(agree) / results.size();
  return report;
}

std::string eval_report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out.precision(9);
  out << "mae " << report.mae << "\n";
  out << "mse " << report.mse << "\n";
  out << "patch_mae " << report.patch_mae << "\n";
  out << "ideal_switch_mae " << report.ideal_switch_mae << "\n";
  out << "switch_accuracy " << report.switch_accuracy << "\n";
  out << "num_scenes " << report.num_scenes << "\n";
  out << "num_patches " << report.num_patches << "\n";
  out << "scene\tgt_count\tpredicted_count\troutes\n";
  for (const SceneRecord& rec : report.scenes) {
    out << rec.id << "\t" << rec.gt_count << "\t" << rec.predicted_count << "\t";
    for (size_t i = 0; i < rec.routes.size(); ++i)
      out << (i ? "," : "") << rec.routes[i];
    out << "\n";
  }
  return out.str();
}

void write_eval_report(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create report " + path);
  out << eval_report_to_text(report);
}

double switch_accuracy(SwitchClassifier& sw, const std::vector<TrainingBatch>& batches,
                       std::vector<Regressor>& regs) {
  return switch_accuracy_with_labels(sw, batches, compute_routing_labels(regs, batches));
}

double switch_accuracy_with_labels(SwitchClassifier& sw,
                                   const std::vector<TrainingBatch>& batches,
                                   const RoutingLabels& labels) {
  if (batches.empty()) throw std::invalid_argument("switch_accuracy: empty dataset");
  if (labels.labels.size() != batches.size())
    throw std::invalid_argument("switch_accuracy: label count mismatch");
  size_t agree = 0;
  for (size_t i = 0; i < batches.size(); ++i)
    if (sw.infer_label(batches[i].switch_pixels) == labels.labels[i]) ++agree;
  return static_cast<double>(agree) / static_cast<double>(batches.size());
}

RoutingLabels cluster_baseline_labels(const std::vector<TrainingBatch>& batches,
                                      ClusterMetric metric) {
  const size_t n = batches.size();
  if (n < 3) throw std::invalid_argument("cluster_baseline_labels: need at least 3 patches");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const auto value = [&](size_t i) {
    return metric == ClusterMetric::kCount ? batches[i].gt_count : batches[i].interhead10;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return value(a) < value(b); });

  // Rank tertiles guarantee group sizes differing by at most 1.
  const size_t n1 = n / 3, n2 = 2 * n / 3;
  RoutingLabels out;
  out.labels.assign(n, 0);
  out.errors.assign(n, 0.0);
  for (size_t rank = 0; rank < n; ++rank) {
    const int tertile = rank < n1 ? 0 : (rank < n2 ? 1 : 2);
    int label;
    if (metric == ClusterMetric::kCount) {
      label = tertile + 1;  // low counts -> R1, high -> R3
    } else {
      // High inter-head distance -> R1, low -> R2, remainder -> R3.
      label = tertile == 2 ? 1 : (tertile == 0 ? 2 : 3);
    }
    out.labels[order[rank]] = label;
  }
  return out;
}

std::string Histogram::to_tsv(const std::vector<std::string>& class_names) const {
  std::ostringstream out;
  out.precision(9);
  out << "bin_lo\tbin_hi";
  for (size_t c = 0; c < counts.size(); ++c) {
    if (c < class_names.size()) out << "\t" << class_names[c];
    else out << "\tR" << (c + 1);
  }
  out << "\n";
  for (size_t bin = 0; bin + 1 < edges.size(); ++bin) {
    out << edges[bin] << "\t" << edges[bin + 1];
    for (const auto& series : counts) out << "\t" << series[bin];
    out << "\n";
  }
  return out.str();
}

Histogram multichotomy_histogram(const std::vector<TrainingBatch>& batches,
                                 const std::vector<int>& routes, int num_classes, int bins,
                                 int k) {
  if (routes.size() != batches.size())
    throw std::invalid_argument("multichotomy_histogram: route count mismatch");
  if (bins < 1) throw std::invalid_argument("multichotomy_histogram: bins must be >= 1");

  std::vector<double> values(batches.size());
  double max_v = 0.0;
  for (size_t i = 0; i < batches.size(); ++i) {
    values[i] = (k == 10) ? batches[i].interhead10
                          : patch_mean_interhead_distance(batches[i].points, k);
    max_v = std::max(max_v, values[i]);
  }
  const double hi = max_v > 0.0 ? max_v : 1.0;

  Histogram h;
  h.edges.resize(static_cast<size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[static_cast<size_t>(i)] = hi * i / bins;
  h.counts.assign(static_cast<size_t>(num_classes),
                  std::vector<size_t>(static_cast<size_t>(bins), 0));
  for (size_t i = 0; i < batches.size(); ++i) {
    const int route = routes[i];
    if (route < 1 || route > num_classes)
      throw std::invalid_argument("multichotomy_histogram: route out of range");
    const int bin = std::min(bins - 1, static_cast<int>(values[i] / hi * bins));
    h.counts[static_cast<size_t>(route - 1)][static_cast<size_t>(bin)] += 1;
  }
  return h;
}

SubsetResult regressor_subset_experiment(const std::vector<RegressorSpec>& subset,
                                         const PreparedDataset& train,
                                         const PreparedDataset& val,
                                         const PreparedDataset& test, const TrainConfig& cfg,
                                         int eval_workers) {
  if (subset.empty()) throw std::invalid_argument("regressor_subset_experiment: empty subset");
  SubsetResult result;
  result.pipeline = full_train(subset, train.batches, val.batches, cfg);

  EvalOptions opts;
  opts.workers = eval_workers;
  if (subset.size() == 1) {
    opts.mode = RoutingMode::kSingle;
    opts.single_index = 0;
  }
  result.report = evaluate_model(
      result.pipeline.regressors,
      result.pipeline.switch_classifier ? &*result.pipeline.switch_classifier : nullptr, test,
      opts);
  return result;
}

}  // namespace scnn
