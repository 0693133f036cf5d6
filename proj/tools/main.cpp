// Command-line driver for the switched crowd-density pipeline: ground-truth
// generation, synthetic data, staged training, evaluation, inference, and
// ablation experiments. All commands are deterministic under their seeds.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scnn/batch.hpp"
#include "scnn/checkpoint.hpp"
#include "scnn/dataset.hpp"
#include "scnn/evaluation.hpp"
#include "scnn/ground_truth.hpp"
#include "scnn/training.hpp"

#include "histogram_png.hpp"

namespace fs = std::filesystem;
using namespace scnn;

namespace {

struct DataArgs {
  std::string manifest;
  double f_train = 0.7, f_val = 0.15, f_test = 0.15;
  uint64_t split_seed = 1;
};

struct PrepArgs {
  std::string kernel_mode = "adaptive";
  KernelConfig kernel;
  GridSpec grid{3, 3};
  int switch_input = 224;
};

struct TrainArgs {
  TrainConfig cfg;
  std::string backbone = "cnn_small";
  std::string balance = "oversample";
  std::string regressors = "R1,R2,R3";
};

void add_data_flags(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--manifest", a.manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--train-frac", a.f_train, "Training split fraction");
  cmd->add_option("--val-frac", a.f_val, "Validation split fraction");
  cmd->add_option("--test-frac", a.f_test, "Test split fraction");
  cmd->add_option("--split-seed", a.split_seed, "Split shuffle seed");
}

void add_kernel_flags(CLI::App* cmd, PrepArgs& a) {
  cmd->add_option("--kernel-mode", a.kernel_mode, "Ground-truth kernel: fixed | adaptive")
      ->check(CLI::IsMember({"fixed", "adaptive"}));
  cmd->add_option("--sigma", a.kernel.sigma_fixed, "Fixed-mode Gaussian spread (px)");
  cmd->add_option("--knn", a.kernel.k_neighbors, "Adaptive-mode neighbor count");
  cmd->add_option("--beta", a.kernel.beta, "Adaptive spread multiplier");
  cmd->add_option("--sigma-floor", a.kernel.sigma_floor, "Minimum spread (px)");
  cmd->add_option("--sigma-fallback", a.kernel.sigma_fallback,
                  "Spread for annotations without neighbors (px)");
  cmd->add_option("--trunc-sigmas", a.kernel.truncation_radius_sigmas,
                  "Kernel truncation radius in sigmas");
}

void add_prepare_flags(CLI::App* cmd, PrepArgs& a) {
  add_kernel_flags(cmd, a);
  cmd->add_option("--grid-rows", a.grid.rows, "Patch grid rows");
  cmd->add_option("--grid-cols", a.grid.cols, "Patch grid columns");
  cmd->add_option("--switch-input", a.switch_input, "Classifier input resolution");
}

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--tp", a.cfg.t_pretrain, "Max pretraining epochs");
  cmd->add_option("--td", a.cfg.t_differential, "Max differential epochs");
  cmd->add_option("--tc", a.cfg.t_coupled, "Max coupled epochs");
  cmd->add_option("--patience", a.cfg.plateau_patience, "Plateau patience (epochs)");
  cmd->add_option("--min-delta", a.cfg.plateau_min_delta, "Plateau improvement threshold");
  cmd->add_option("--lr", a.cfg.lr, "Regressor learning rate");
  cmd->add_option("--momentum", a.cfg.momentum, "SGD momentum");
  cmd->add_option("--switch-lr", a.cfg.switch_lr, "Switch learning rate (0: use --lr)");
  cmd->add_option("--init-std", a.cfg.init_std, "Gaussian weight init scale");
  cmd->add_option("--switch-backbone", a.backbone,
                  "cnn_small | vgg16_style | vgg19_style | resnet_style");
  cmd->add_option("--balance", a.balance, "Class balancing: oversample | undersample")
      ->check(CLI::IsMember({"oversample", "undersample"}));
  cmd->add_option("--seed", a.cfg.seed, "Run seed");
}

KernelConfig resolve_kernel(const PrepArgs& a) {
  KernelConfig k = a.kernel;
  k.mode = a.kernel_mode == "fixed" ? KernelMode::kFixed : KernelMode::kAdaptive;
  k.validate();
  return k;
}

TrainConfig resolve_train(const TrainArgs& a) {
  TrainConfig cfg = a.cfg;
  cfg.switch_backbone = parse_backbone(a.backbone);
  cfg.balance_undersample = a.balance == "undersample";
  cfg.validate();
  return cfg;
}

std::vector<RegressorSpec> resolve_specs(const std::string& list) {
  std::vector<RegressorSpec> specs;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) specs.push_back(RegressorSpec::preset(item));
  }
  if (specs.empty()) throw std::runtime_error("no regressors given");
  return specs;
}

struct PreparedSplits {
  PreparedDataset train, val, test;
};

PreparedSplits load_and_prepare(const DataArgs& d, const PrepArgs& p) {
  const std::vector<Scene> scenes = load_dataset(d.manifest);
  const DatasetSplit split =
      split_dataset(scenes, d.f_train, d.f_val, d.f_test, d.split_seed);
  PrepareOptions opts;
  opts.kernel = resolve_kernel(p);
  opts.grid = p.grid;
  opts.switch_input_size = p.switch_input;
  PreparedSplits out;
  out.train = prepare_dataset(split.train, opts);
  out.val = prepare_dataset(split.val, opts);
  out.test = prepare_dataset(split.test, opts);
  return out;
}

void require_checkpoint(const std::string& stem, const std::string& hint) {
  if (!fs::exists(stem + ".meta"))
    throw std::runtime_error("missing prerequisite checkpoint " + stem + ".meta (" + hint + ")");
}

std::vector<Regressor*> reg_ptrs(std::vector<Regressor>& regs) {
  std::vector<Regressor*> out;
  for (Regressor& r : regs) out.push_back(&r);
  return out;
}

// --------------------------------------------------------------------------
// Stage runners shared by `train --stage ...`.

void run_pretrain_stage(const std::string& out_dir, const std::vector<RegressorSpec>& specs,
                        const PreparedSplits& data, const TrainConfig& cfg) {
  std::vector<Regressor> regs;
  for (size_t k = 0; k < specs.size(); ++k)
    regs.emplace_back(specs[k], derive_seed(cfg.seed, "init", k), cfg.init_std);
  const TrainLog log = pretrain(regs, data.train.batches, data.val.batches, cfg);
  save_checkpoint(out_dir + "/pretrain", "pretrain", cfg.seed, 0, reg_ptrs(regs), nullptr);
  write_train_log(out_dir + "/train_log_pretrain.tsv", log);
}

void run_differential_stage(const std::string& out_dir, const PreparedSplits& data,
                            const TrainConfig& cfg) {
  require_checkpoint(out_dir + "/pretrain", "run --stage pretrain first");
  Checkpoint ck = load_checkpoint(out_dir + "/pretrain");
  TrainLog log;
  differential_train(ck.regressors, data.train.batches, data.val.batches, cfg, &log);
  save_checkpoint(out_dir + "/differential", "differential", cfg.seed, 0,
                  reg_ptrs(ck.regressors), nullptr);
  write_train_log(out_dir + "/train_log_differential.tsv", log);
}

void run_coupled_stage(const std::string& out_dir, const PreparedSplits& data,
                       const TrainConfig& cfg) {
  require_checkpoint(out_dir + "/differential", "run --stage differential first");
  Checkpoint ck = load_checkpoint(out_dir + "/differential");
  const int input_size = data.train.batches.front().switch_pixels.height;
  SwitchClassifier sw(cfg.switch_backbone, static_cast<int>(ck.regressors.size()), input_size,
                      derive_seed(cfg.seed, "switch"), cfg.init_std);
  TrainLog log;
  coupled_train(ck.regressors, sw, data.train.batches, data.val.batches, cfg, &log);
  save_checkpoint(out_dir + "/coupled", "coupled", cfg.seed, 0, reg_ptrs(ck.regressors),
                  nullptr);
  save_checkpoint(out_dir + "/switch", "coupled", cfg.seed, sw.epoch, {}, &sw);
  write_train_log(out_dir + "/train_log_coupled.tsv", log);
}

struct LoadedModel {
  std::vector<Regressor> regressors;
  std::optional<SwitchClassifier> sw;
};

LoadedModel load_model(const std::string& ckpt_dir, bool need_switch) {
  require_checkpoint(ckpt_dir + "/coupled", "train with --stage full or coupled first");
  LoadedModel m;
  m.regressors = load_checkpoint(ckpt_dir + "/coupled").regressors;
  if (need_switch) {
    require_checkpoint(ckpt_dir + "/switch", "train with --stage full or coupled first");
    Checkpoint sc = load_checkpoint(ckpt_dir + "/switch");
    if (!sc.switch_classifier)
      throw std::runtime_error(ckpt_dir + "/switch holds no switch classifier");
    m.sw = std::move(sc.switch_classifier);
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched multi-receptive-field crowd density estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file (INI/TOML)", false);

  // ------------------------------------------------------------ generate-gt
  auto* gt_cmd = app.add_subcommand("generate-gt", "Density-map ground truth for a dataset");
  auto gt_data = std::make_shared<std::string>();
  auto gt_out = std::make_shared<std::string>();
  auto gt_prep = std::make_shared<PrepArgs>();
  gt_cmd->add_option("--manifest", *gt_data, "Dataset manifest JSON")->required();
  gt_cmd->add_option("--out", *gt_out, "Output directory")->required();
  add_kernel_flags(gt_cmd, *gt_prep);
  gt_cmd->callback([gt_data, gt_out, gt_prep] {
    const KernelConfig kernel = resolve_kernel(*gt_prep);
    const std::vector<Scene> scenes = load_dataset(*gt_data);  // validates before output
    fs::create_directories(*gt_out);
    double total_mass = 0.0;
    size_t total_count = 0;
    for (const Scene& s : scenes) {
      const DensityMap dm = make_density_map(s.annotations, kernel);
      save_density_map(*gt_out + "/" + s.id, dm);
      const double mass = dm.sum();
      total_mass += mass;
      total_count += s.annotations.count();
      std::cout << s.id << " mass " << mass << " count " << s.annotations.count() << "\n";
    }
    std::cout << "total mass " << total_mass << " count " << total_count << "\n";
  });

  // ------------------------------------------------------------------ synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto synth_out = std::make_shared<std::string>();
  auto synth_cfg = std::make_shared<SynthConfig>(SynthConfig::desk_default());
  auto synth_regimes = std::make_shared<std::vector<std::string>>();
  synth_cmd->add_option("--out", *synth_out, "Output directory")->required();
  synth_cmd->add_option("--scenes", synth_cfg->num_scenes, "Number of scenes");
  synth_cmd->add_option("--height", synth_cfg->frame_height, "Frame height (px)");
  synth_cmd->add_option("--width", synth_cfg->frame_width, "Frame width (px)");
  synth_cmd->add_option("--seed", synth_cfg->seed, "Generator seed");
  synth_cmd->add_option("--regime", *synth_regimes,
                        "Regime name:density_lo:density_hi:radius_lo:radius_hi:texture_amp "
                        "(repeatable, replaces defaults)");
  synth_cmd->callback([synth_out, synth_cfg, synth_regimes] {
    if (!synth_regimes->empty()) {
      synth_cfg->regimes.clear();
      for (const std::string& spec : *synth_regimes) {
        RegimeConfig r;
        char colon;
        std::istringstream ss(spec);
        std::getline(ss, r.name, ':');
        if (!(ss >> r.density_lo >> colon >> r.density_hi >> colon >> r.radius_lo >> colon >>
              r.radius_hi >> colon >> r.texture_amp))
          throw std::runtime_error("bad --regime spec: " + spec);
        synth_cfg->regimes.push_back(r);
      }
    }
    const std::vector<Scene> scenes = generate_synthetic(*synth_cfg);
    fs::create_directories(*synth_out);
    save_dataset(*synth_out + "/manifest.json", scenes);
    size_t total = 0;
    for (const Scene& s : scenes) total += s.annotations.count();
    std::cout << "wrote " << scenes.size() << " scenes, " << total << " annotations to "
              << *synth_out << "\n";
  });

  // ------------------------------------------------------------------ train
  auto* train_cmd = app.add_subcommand("train", "Staged training");
  auto train_data = std::make_shared<DataArgs>();
  auto train_prep = std::make_shared<PrepArgs>();
  auto train_args = std::make_shared<TrainArgs>();
  auto train_stage = std::make_shared<std::string>("full");
  auto train_out = std::make_shared<std::string>();
  add_data_flags(train_cmd, *train_data);
  add_prepare_flags(train_cmd, *train_prep);
  add_train_flags(train_cmd, *train_args);
  train_cmd->add_option("--regressors", train_args->regressors, "Comma list of R1,R2,R3");
  train_cmd->add_option("--stage", *train_stage, "pretrain | differential | coupled | full")
      ->check(CLI::IsMember({"pretrain", "differential", "coupled", "full"}));
  train_cmd->add_option("--out", *train_out, "Checkpoint/log directory")->required();
  train_cmd->callback([train_data, train_prep, train_args, train_stage, train_out] {
    const TrainConfig cfg = resolve_train(*train_args);
    const std::vector<RegressorSpec> specs = resolve_specs(train_args->regressors);
    const PreparedSplits data = load_and_prepare(*train_data, *train_prep);
    fs::create_directories(*train_out);
    if (*train_stage == "pretrain") {
      run_pretrain_stage(*train_out, specs, data, cfg);
    } else if (*train_stage == "differential") {
      run_differential_stage(*train_out, data, cfg);
    } else if (*train_stage == "coupled") {
      run_coupled_stage(*train_out, data, cfg);
    } else {
      run_pretrain_stage(*train_out, specs, data, cfg);
      run_differential_stage(*train_out, data, cfg);
      run_coupled_stage(*train_out, data, cfg);
      // Merge the per-stage logs into one machine-readable history.
      std::ofstream merged(*train_out + "/train_log.tsv");
      for (const char* name :
           {"train_log_pretrain.tsv", "train_log_differential.tsv", "train_log_coupled.tsv"}) {
        std::ifstream in(*train_out + "/" + name);
        std::string line;
        bool first_file = std::string(name) == "train_log_pretrain.tsv";
        bool header = true;
        while (std::getline(in, line)) {
          if (header && !first_file) {
            header = false;
            continue;
          }
          header = false;
          merged << line << "\n";
        }
      }
    }
    std::cout << "stage " << *train_stage << " complete; checkpoints in " << *train_out << "\n";
  });

  // --------------------------------------------------------------- evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained model on the test split");
  auto eval_data = std::make_shared<DataArgs>();
  auto eval_prep = std::make_shared<PrepArgs>();
  auto eval_ckpt = std::make_shared<std::string>();
  auto eval_report_path = std::make_shared<std::string>();
  auto eval_oracle = std::make_shared<bool>(false);
  auto eval_single = std::make_shared<std::string>();
  auto eval_workers = std::make_shared<int>(1);
  add_data_flags(eval_cmd, *eval_data);
  add_prepare_flags(eval_cmd, *eval_prep);
  eval_cmd->add_option("--checkpoints", *eval_ckpt, "Checkpoint directory")->required();
  eval_cmd->add_option("--report", *eval_report_path, "Report output path");
  eval_cmd->add_flag("--oracle-routing", *eval_oracle, "Route each patch by best count error");
  eval_cmd->add_option("--single", *eval_single, "Evaluate one regressor (R1/R2/R3) unswitched");
  eval_cmd->add_option("--workers", *eval_workers, "Concurrent scene evaluations");
  eval_cmd->callback([eval_data, eval_prep, eval_ckpt, eval_report_path, eval_oracle,
                      eval_single, eval_workers] {
    const PreparedSplits data = load_and_prepare(*eval_data, *eval_prep);
    LoadedModel model = load_model(*eval_ckpt, eval_single->empty());
    EvalOptions opts;
    opts.workers = *eval_workers;
    if (!eval_single->empty()) {
      opts.mode = RoutingMode::kSingle;
      bool found = false;
      for (size_t k = 0; k < model.regressors.size(); ++k) {
        if (model.regressors[k].name() == *eval_single) {
          opts.single_index = static_cast<int>(k);
          found = true;
        }
      }
      if (!found) throw std::runtime_error("regressor " + *eval_single + " not in checkpoint");
    } else if (*eval_oracle) {
      opts.mode = RoutingMode::kOracle;
    }
    const EvalReport report = evaluate_model(
        model.regressors, model.sw ? &*model.sw : nullptr, data.test, opts);
    std::cout << eval_report_to_text(report);
    if (!eval_report_path->empty()) write_eval_report(*eval_report_path, report);
  });

  // ------------------------------------------------------------------ infer
  auto* infer_cmd = app.add_subcommand("infer", "Predict a density map for one image");
  auto infer_image = std::make_shared<std::string>();
  auto infer_ckpt = std::make_shared<std::string>();
  auto infer_out = std::make_shared<std::string>();
  auto infer_prep = std::make_shared<PrepArgs>();
  infer_cmd->add_option("--image", *infer_image, "Grayscale PNG input")->required();
  infer_cmd->add_option("--checkpoints", *infer_ckpt, "Checkpoint directory")->required();
  infer_cmd->add_option("--out", *infer_out, "Output density-map stem")->required();
  infer_cmd->add_option("--grid-rows", infer_prep->grid.rows, "Patch grid rows");
  infer_cmd->add_option("--grid-cols", infer_prep->grid.cols, "Patch grid columns");
  infer_cmd->add_option("--switch-input", infer_prep->switch_input,
                        "Classifier input resolution");
  infer_cmd->callback([infer_image, infer_ckpt, infer_out, infer_prep] {
    LoadedModel model = load_model(*infer_ckpt, true);
    Scene scene;
    scene.id = fs::path(*infer_image).stem().string();
    scene.image = read_png_gray(*infer_image);
    scene.annotations.frame_height = scene.image.height;
    scene.annotations.frame_width = scene.image.width;

    std::map<std::pair<int, int>, DensityMap> maps;
    double count = 0.0;
    std::vector<int> routes;
    for (const PatchRecord& rec : split_scene(scene, infer_prep->grid)) {
      const nn::Tensor<float> pixels = image_to_tensor(rec.pixels);
      const int label = model.sw->infer_label(
          model.sw->prepare_input(rec.pixels));
      routes.push_back(label);
      DensityMap dm = model.regressors[static_cast<size_t>(label - 1)].forward_density(pixels);
      count += dm.sum();
      maps.emplace(std::make_pair(rec.grid_row, rec.grid_col), std::move(dm));
    }
    const DensityMap assembled =
        assemble_density(maps, infer_prep->grid, scene.image.height, scene.image.width, 4);
    save_density_map(*infer_out, assembled);
    std::cout << "count " << count << "\nroutes ";
    for (size_t i = 0; i < routes.size(); ++i) std::cout << (i ? "," : "") << routes[i];
    std::cout << "\nwrote " << *infer_out << ".meta/.raw\n";
  });

  // ----------------------------------------------------------------- ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Ablation experiments");
  auto ab_data = std::make_shared<DataArgs>();
  auto ab_prep = std::make_shared<PrepArgs>();
  auto ab_args = std::make_shared<TrainArgs>();
  auto ab_experiment = std::make_shared<std::string>();
  auto ab_subset = std::make_shared<std::string>("R1,R2,R3");
  auto ab_report = std::make_shared<std::string>();
  auto ab_workers = std::make_shared<int>(1);
  add_data_flags(ablate_cmd, *ab_data);
  add_prepare_flags(ablate_cmd, *ab_prep);
  add_train_flags(ablate_cmd, *ab_args);
  ablate_cmd
      ->add_option("--experiment", *ab_experiment,
                   "subset | cluster-count | cluster-interhead | no-coupled-training")
      ->required()
      ->check(CLI::IsMember({"subset", "cluster-count", "cluster-interhead",
                             "no-coupled-training"}));
  ablate_cmd->add_option("--subset", *ab_subset, "Regressor subset, e.g. R1,R3");
  ablate_cmd->add_option("--report", *ab_report, "Report output path");
  ablate_cmd->add_option("--workers", *ab_workers, "Concurrent scene evaluations");
  ablate_cmd->callback([ab_data, ab_prep, ab_args, ab_experiment, ab_subset, ab_report,
                        ab_workers] {
    const TrainConfig cfg = resolve_train(*ab_args);
    const PreparedSplits data = load_and_prepare(*ab_data, *ab_prep);
    EvalReport report;

    if (*ab_experiment == "subset") {
      const SubsetResult res = regressor_subset_experiment(
          resolve_specs(*ab_subset), data.train, data.val, data.test, cfg, *ab_workers);
      report = res.report;
    } else if (*ab_experiment == "no-coupled-training") {
      // Pretrain + differential, then a stand-alone switch on frozen labels.
      std::vector<RegressorSpec> specs = resolve_specs(ab_args->regressors);
      std::vector<Regressor> regs;
      for (size_t k = 0; k < specs.size(); ++k)
        regs.emplace_back(specs[k], derive_seed(cfg.seed, "init", k), cfg.init_std);
      pretrain(regs, data.train.batches, data.val.batches, cfg);
      const RoutingLabels labels =
          differential_train(regs, data.train.batches, data.val.batches, cfg);
      const int input_size = data.train.batches.front().switch_pixels.height;
      SwitchClassifier sw(cfg.switch_backbone, static_cast<int>(regs.size()), input_size,
                          derive_seed(cfg.seed, "switch"), cfg.init_std);
      standalone_switch_train(regs, sw, labels, data.train.batches, data.val.batches, cfg);
      EvalOptions opts;
      opts.workers = *ab_workers;
      report = evaluate_model(regs, &sw, data.test, opts);
    } else {
      // Attribute-clustering baseline: pretrain, assign patches by metric
      // tertiles, fine-tune each regressor on its group, train the switch on
      // the fixed cluster labels, then evaluate switch-routed.
      const ClusterMetric metric = *ab_experiment == "cluster-count"
                                       ? ClusterMetric::kCount
                                       : ClusterMetric::kInterhead;
      std::vector<RegressorSpec> specs = resolve_specs(ab_args->regressors);
      std::vector<Regressor> regs;
      for (size_t k = 0; k < specs.size(); ++k)
        regs.emplace_back(specs[k], derive_seed(cfg.seed, "init", k), cfg.init_std);
      pretrain(regs, data.train.batches, data.val.batches, cfg);
      const RoutingLabels labels = cluster_baseline_labels(data.train.batches, metric);
      std::mt19937_64 rng(derive_seed(cfg.seed, "cluster"));
      const Router router = [&labels](const TrainingBatch&, size_t idx) {
        return labels.labels[idx];
      };
      for (int epoch = 1; epoch <= cfg.t_differential; ++epoch) {
        std::vector<size_t> order(data.train.batches.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        switched_epoch(regs, data.train.batches, router, order, cfg);
      }
      const int input_size = data.train.batches.front().switch_pixels.height;
      SwitchClassifier sw(cfg.switch_backbone, static_cast<int>(regs.size()), input_size,
                          derive_seed(cfg.seed, "switch"), cfg.init_std);
      standalone_switch_train(regs, sw, labels, data.train.batches, data.val.batches, cfg);
      EvalOptions opts;
      opts.workers = *ab_workers;
      report = evaluate_model(regs, &sw, data.test, opts);
    }

    std::cout << eval_report_to_text(report);
    if (!ab_report->empty()) write_eval_report(*ab_report, report);
  });

  // -------------------------------------------------------------- histogram
  auto* hist_cmd = app.add_subcommand(
      "histogram", "Per-regressor inter-head-distance histogram of routed test patches");
  auto h_data = std::make_shared<DataArgs>();
  auto h_prep = std::make_shared<PrepArgs>();
  auto h_ckpt = std::make_shared<std::string>();
  auto h_bins = std::make_shared<int>(12);
  auto h_table = std::make_shared<std::string>();
  auto h_png = std::make_shared<std::string>();
  add_data_flags(hist_cmd, *h_data);
  add_prepare_flags(hist_cmd, *h_prep);
  hist_cmd->add_option("--checkpoints", *h_ckpt, "Checkpoint directory")->required();
  hist_cmd->add_option("--bins", *h_bins, "Histogram bins");
  hist_cmd->add_option("--table", *h_table, "TSV output path");
  hist_cmd->add_option("--png", *h_png, "Rendered chart output path");
  hist_cmd->callback([h_data, h_prep, h_ckpt, h_bins, h_table, h_png] {
    const PreparedSplits data = load_and_prepare(*h_data, *h_prep);
    LoadedModel model = load_model(*h_ckpt, true);
    std::vector<int> routes;
    routes.reserve(data.test.batches.size());
    for (const TrainingBatch& b : data.test.batches)
      routes.push_back(model.sw->infer_label(b.switch_pixels));
    const Histogram hist = multichotomy_histogram(
        data.test.batches, routes, model.sw->num_classes(), *h_bins);
    std::vector<std::string> names;
    for (const Regressor& r : model.regressors) names.push_back(r.name());
    const std::string tsv = hist.to_tsv(names);
    std::cout << tsv;
    if (!h_table->empty()) {
      std::ofstream out(*h_table);
      if (!out) throw std::runtime_error("cannot create " + *h_table);
      out << tsv;
    }
    if (!h_png->empty()) scnn::tools::render_histogram_png(*h_png, hist);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
