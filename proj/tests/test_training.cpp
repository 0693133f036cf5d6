#include "doctest.h"

#include <random>

#include "scnn/training.hpp"
#include "test_util.hpp"

using namespace scnn;
using namespace scnn::test;

namespace {

// Regressor whose output is constant: zero weights, head bias = cell_value.
// With a 16x16 input the output has 16 cells, so count = 16 * cell_value.
Regressor constant_regressor(const std::string& name, float cell_value) {
  Regressor reg(tiny_spec(name), 1);
  zero_params(reg.net());
  auto params = reg.net().params();
  for (auto& p : params) {
    if (p.name == "head.bias") p.value->data[0] = cell_value;
  }
  return reg;
}

std::vector<TrainingBatch> uniform_batches(int n, double target_value, uint64_t seed = 1) {
  std::vector<TrainingBatch> out;
  for (int i = 0; i < n; ++i) {
    TrainingBatch b = make_batch(16, 16, 0.5f, target_value);
    b.pixels = noise_tensor(16, 16, seed + i);
    b.switch_pixels = b.pixels;
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

TEST_SUITE("best_label") {
  TEST_CASE("argmin of absolute count error") {
    const BestLabel bl = best_label({12, 9, 15}, 10);
    CHECK(bl.label == 2);
    CHECK(bl.error == doctest::Approx(1.0));
  }

  TEST_CASE("ties break toward the lowest index") {
    const BestLabel bl = best_label({9, 11, 20}, 10);
    CHECK(bl.label == 1);
    CHECK(bl.error == doctest::Approx(1.0));
  }

  TEST_CASE("exact match") {
    const BestLabel bl = best_label({10, 3, 99}, 10);
    CHECK(bl.label == 1);
    CHECK(bl.error == 0.0);
  }

  TEST_CASE("non-finite counts are rejected") {
    CHECK_THROWS_AS(best_label({1.0, std::nan(""), 2.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(best_label({1.0, 2.0}, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
  }
}

TEST_SUITE("minimal_achievable_mae") {
  TEST_CASE("hand case via constant regressors") {
    // Counts are (16*b) with power-of-two biases, exact in f32:
    // R1 -> 1, R2 -> 2, R3 -> 4.
    std::vector<Regressor> regs;
    regs.push_back(constant_regressor("R1", 1.0f / 16));
    regs.push_back(constant_regressor("R2", 2.0f / 16));
    regs.push_back(constant_regressor("R3", 4.0f / 16));

    std::vector<TrainingBatch> batches;
    batches.push_back(make_batch(16, 16, 0.5f, 0.0));  // gt 0: errors (1,2,4) -> min 1
    TrainingBatch b2 = make_batch(16, 16, 0.5f, 0.0);
    b2.gt_count = 6.0;  // errors (5,4,2) -> min 2
    batches.push_back(std::move(b2));

    CHECK(minimal_achievable_mae(regs, batches) == doctest::Approx(1.5).epsilon(1e-9));
  }

  TEST_CASE("hand case from precomputed counts") {
    // gt 0 makes |count - gt| equal the counts themselves:
    // row minima are min(1,2,3) = 1 and min(4,0,6) = 0, mean 0.5.
    CHECK(minimal_achievable_mae({{1, 2, 3}, {4, 0, 6}}, {0, 0}) ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(minimal_achievable_mae({{1.0}}, {0.0, 1.0}), std::invalid_argument);
  }

  TEST_CASE("single regressor reduces to its own MAE") {
    std::vector<Regressor> one;
    one.push_back(constant_regressor("R1", 2.0f / 16));  // count 2
    std::vector<TrainingBatch> batches;
    TrainingBatch b = make_batch(16, 16, 0.2f, 0.0);
    b.gt_count = 5.0;
    batches.push_back(std::move(b));
    CHECK(minimal_achievable_mae(one, batches) == doctest::Approx(3.0));
    CHECK(minimal_achievable_mae(one, batches) ==
          doctest::Approx(validation_mae_single(one[0], batches)));
  }

  TEST_CASE("never above any individual regressor's MAE") {
    std::vector<Regressor> regs;
    for (int k = 0; k < 3; ++k)
      regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 40 + k);
    const auto batches = uniform_batches(6, 0.3, 77);
    const double ideal = minimal_achievable_mae(regs, batches);
    for (Regressor& reg : regs) CHECK(ideal <= validation_mae_single(reg, batches) + 1e-12);
  }

  TEST_CASE("empty dataset is an error") {
    std::vector<Regressor> regs;
    regs.push_back(constant_regressor("R1", 0.1f));
    CHECK_THROWS_AS(minimal_achievable_mae(regs, {}), std::invalid_argument);
  }
}

TEST_SUITE("plateau rule") {
  TEST_CASE("constant validation MAE with patience 1 stops after 2 epochs") {
    std::vector<Regressor> regs{Regressor(tiny_spec("R1"), 3)};
    const auto train = uniform_batches(2, 0.2);
    const auto val = uniform_batches(1, 0.2);
    TrainConfig cfg;
    cfg.t_pretrain = 50;
    cfg.plateau_patience = 1;
    cfg.lr = 0.0;  // training changes nothing, so validation MAE is constant
    const TrainLog log = pretrain(regs, train, val, cfg);
    CHECK(log.size() == 2);
  }

  TEST_CASE("epoch cap wins when no plateau occurs") {
    PlateauTracker tracker;
    CHECK_FALSE(tracker.should_stop(10.0, 0.1, 2));
    CHECK_FALSE(tracker.should_stop(9.0, 0.1, 2));
    CHECK_FALSE(tracker.should_stop(8.95, 0.1, 2));  // not enough improvement: stale 1
    CHECK(tracker.should_stop(8.94, 0.1, 2));        // stale 2 -> stop
  }
}

TEST_SUITE("pretrain") {
  TEST_CASE("loss decreases on a trivially learnable patch") {
    std::vector<Regressor> regs{Regressor(tiny_spec("R1"), 5)};
    const auto train = uniform_batches(1, 0.5, 3);
    const auto val = train;
    TrainConfig cfg;
    cfg.t_pretrain = 3;
    cfg.plateau_patience = 5;
    cfg.lr = 1e-2;
    const TrainLog log = pretrain(regs, train, val, cfg);
    REQUIRE(log.size() == 3);
    CHECK(log[2].train_loss < log[0].train_loss);
    CHECK(log[1].train_loss <= log[0].train_loss * 1.01);
  }

  TEST_CASE("seeded runs give identical histories and parameters") {
    const auto train = uniform_batches(3, 0.4, 9);
    const auto val = uniform_batches(1, 0.4, 90);
    TrainConfig cfg;
    cfg.t_pretrain = 2;
    cfg.lr = 1e-3;
    cfg.seed = 1234;

    std::vector<Regressor> a{Regressor(tiny_spec("R1"), 5), Regressor(tiny_spec("R2", 7), 6)};
    std::vector<Regressor> b{Regressor(tiny_spec("R1"), 5), Regressor(tiny_spec("R2", 7), 6)};
    const TrainLog la = pretrain(a, train, val, cfg);
    const TrainLog lb = pretrain(b, train, val, cfg);
    REQUIRE(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) {
      CHECK(la[i].train_loss == lb[i].train_loss);
      CHECK(la[i].val_mae == lb[i].val_mae);
    }
    for (size_t k = 0; k < a.size(); ++k)
      CHECK(params_equal(snapshot_params(a[k].net()), snapshot_params(b[k].net())));
  }

  TEST_CASE("empty dataset is an error") {
    std::vector<Regressor> regs{Regressor(tiny_spec("R1"), 5)};
    TrainConfig cfg;
    CHECK_THROWS_AS(pretrain(regs, {}, uniform_batches(1, 0.1), cfg), std::invalid_argument);
    CHECK_THROWS_AS(pretrain(regs, uniform_batches(1, 0.1), {}, cfg), std::invalid_argument);
  }
}

TEST_SUITE("differential training") {
  TEST_CASE("every step updates exactly one regressor") {
    std::vector<Regressor> regs;
    for (int k = 0; k < 3; ++k)
      regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 50 + k);
    const auto train = uniform_batches(8, 0.4, 21);
    TrainConfig cfg;
    cfg.lr = 1e-3;

    std::vector<std::vector<std::vector<float>>> prev;
    for (Regressor& r : regs) prev.push_back(snapshot_params(r.net()));

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    size_t steps = 0;
    differential_epoch(regs, train, order, cfg, [&](size_t, int chosen) {
      int changed = 0;
      for (size_t k = 0; k < regs.size(); ++k) {
        auto now = snapshot_params(regs[k].net());
        if (!params_equal(now, prev[k])) {
          ++changed;
          CHECK(static_cast<int>(k) + 1 == chosen);
          prev[k] = std::move(now);
        }
      }
      CHECK(changed == 1);
      ++steps;
    });
    CHECK(steps == train.size());
  }

  TEST_CASE("one-patch dataset updates one regressor per epoch") {
    std::vector<Regressor> regs;
    for (int k = 0; k < 3; ++k)
      regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 60 + k);
    const auto train = uniform_batches(1, 0.3, 5);
    TrainConfig cfg;
    cfg.t_differential = 2;
    cfg.lr = 1e-3;
    cfg.plateau_patience = 10;
    int updates = 0;
    differential_train(regs, train, train, cfg, nullptr,
                       [&](size_t, int) { ++updates; });
    CHECK(updates == 2);  // one per epoch
  }

  TEST_CASE("e_c after a differential epoch does not regress (logged, not asserted)") {
    std::vector<Regressor> regs;
    for (int k = 0; k < 3; ++k)
      regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 70 + k);
    auto train = uniform_batches(6, 0.5, 31);
    TrainConfig cfg;
    cfg.lr = 1e-3;
    const double before = minimal_achievable_mae(regs, train);
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    differential_epoch(regs, train, order, cfg);
    const double after = minimal_achievable_mae(regs, train);
    MESSAGE("E_C before ", before, " after ", after);
  }
}

TEST_SUITE("make_switch_dataset") {
  namespace {
  RoutingLabels labels_with_sizes(int a, int b, int c) {
    RoutingLabels l;
    for (int i = 0; i < a; ++i) l.labels.push_back(1);
    for (int i = 0; i < b; ++i) l.labels.push_back(2);
    for (int i = 0; i < c; ++i) l.labels.push_back(3);
    l.errors.assign(l.labels.size(), 0.0);
    return l;
  }

  std::array<size_t, 3> class_sizes(const std::vector<std::pair<size_t, int>>& set) {
    std::array<size_t, 3> sizes{0, 0, 0};
    for (const auto& [idx, label] : set) sizes[static_cast<size_t>(label - 1)]++;
    return sizes;
  }
  }  // namespace

  TEST_CASE("oversampling balances up to the largest class") {
    const auto set = make_switch_dataset(labels_with_sizes(100, 40, 60), 3, 11);
    const auto sizes = class_sizes(set);
    CHECK(sizes[0] == 100);
    CHECK(sizes[1] == 100);
    CHECK(sizes[2] == 100);
    // Originals are all retained.
    std::set<size_t> class2;
    for (const auto& [idx, label] : set)
      if (label == 2) class2.insert(idx);
    CHECK(class2.size() == 40);
  }

  TEST_CASE("already balanced input is unchanged as a multiset") {
    const RoutingLabels labels = labels_with_sizes(50, 50, 50);
    const auto set = make_switch_dataset(labels, 3, 4);
    REQUIRE(set.size() == 150);
    std::multiset<std::pair<size_t, int>> multi(set.begin(), set.end());
    for (size_t i = 0; i < labels.labels.size(); ++i)
      CHECK(multi.count({i, labels.labels[i]}) == 1);
  }

  TEST_CASE("seeded draws are identical") {
    const RoutingLabels labels = labels_with_sizes(9, 3, 7);
    CHECK(make_switch_dataset(labels, 3, 8) == make_switch_dataset(labels, 3, 8));
  }

  TEST_CASE("undersampling balances down to the smallest class") {
    const auto set = make_switch_dataset(labels_with_sizes(100, 40, 60), 3, 11, true);
    const auto sizes = class_sizes(set);
    CHECK(sizes[0] == 40);
    CHECK(sizes[1] == 40);
    CHECK(sizes[2] == 40);
  }

  TEST_CASE("an empty class is an error naming the class") {
    CHECK_THROWS_WITH_AS(make_switch_dataset(labels_with_sizes(5, 0, 5), 3, 1),
                         doctest::Contains("class 2"), std::runtime_error);
  }
}

TEST_SUITE("switch training") {
  TEST_CASE("linearly separable classes reach high accuracy") {
    // Bright, dark, and split patches; GAP features separate them linearly.
    std::vector<TrainingBatch> batches;
    RoutingLabels labels;
    std::mt19937_64 noise(5);
    std::uniform_real_distribution<float> jitter(-0.05f, 0.05f);
    for (int i = 0; i < 30; ++i) {
      const int cls = i % 3;
      TrainingBatch b = make_batch(16, 16, 0.0f, 0.0);
      for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
          float base = cls == 0 ? 0.9f : (cls == 1 ? 0.1f : (c < 8 ? 0.9f : 0.1f));
          b.pixels.at(0, r, c) = std::clamp(base + jitter(noise), 0.0f, 1.0f);
        }
      b.switch_pixels = b.pixels;
      batches.push_back(std::move(b));
      labels.labels.push_back(cls + 1);
      labels.errors.push_back(0);
    }
    SwitchClassifier sw(SwitchBackbone::kCnnSmall, 3, 16, 7);
    std::mt19937_64 rng(3);
    double acc = 0;
    for (int epoch = 0; epoch < 10; ++epoch) {
      const auto balanced = make_switch_dataset(labels, 3, rng());
      acc = train_switch_epoch(sw, batches, balanced, 0.01, 0.9, rng).accuracy;
    }
    CHECK(acc > 0.9);
  }

  TEST_CASE("constant-label dataset degenerates to accuracy 1") {
    std::vector<TrainingBatch> batches;
    std::vector<std::pair<size_t, int>> balanced;
    for (int i = 0; i < 10; ++i) {
      TrainingBatch b = make_batch(16, 16, 0.4f, 0.0);
      b.pixels = noise_tensor(16, 16, 100 + i);
      b.switch_pixels = b.pixels;
      batches.push_back(std::move(b));
      balanced.emplace_back(i, 1);
    }
    SwitchClassifier sw(SwitchBackbone::kCnnSmall, 3, 16, 9);
    std::mt19937_64 rng(4);
    double acc = 0;
    for (int epoch = 0; epoch < 8; ++epoch)
      acc = train_switch_epoch(sw, batches, balanced, 0.05, 0.9, rng).accuracy;
    CHECK(acc == doctest::Approx(1.0));
  }

  TEST_CASE("lr zero leaves parameters and accuracy unchanged") {
    std::vector<TrainingBatch> batches;
    std::vector<std::pair<size_t, int>> balanced;
    for (int i = 0; i < 6; ++i) {
      TrainingBatch b = make_batch(16, 16, 0.4f, 0.0);
      b.pixels = noise_tensor(16, 16, 200 + i);
      b.switch_pixels = b.pixels;
      batches.push_back(std::move(b));
      balanced.emplace_back(i, i % 3 + 1);
    }
    SwitchClassifier sw(SwitchBackbone::kCnnSmall, 3, 16, 10);
    const auto before = snapshot_params(sw.net());
    std::mt19937_64 rng(5);
    const auto stats = train_switch_epoch(sw, batches, balanced, 0.0, 0.9, rng);
    CHECK(params_equal(before, snapshot_params(sw.net())));
    // Accuracy equals the frozen classifier's accuracy on the same set.
    size_t agree = 0;
    for (const auto& [idx, label] : balanced)
      agree += sw.infer_label(batches[idx].switch_pixels) == label;
    CHECK(stats.accuracy == doctest::Approx(static_cast<double>(agree) / balanced.size()));
  }
}

TEST_SUITE("coupled training") {
  TEST_CASE("phase order is labels, switch, switched-differential") {
    std::vector<Regressor> regs;
    for (int k = 0; k < 3; ++k)
      regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 80 + k);
    auto train = uniform_batches(4, 0.4, 41);
    // Distinct targets so every class has at least one member after routing.
    train[1].gt_count = 1.0;
    train[2].gt_count = 3.0;
    SwitchClassifier sw(SwitchBackbone::kCnnSmall, 3, 16, 11);
    TrainConfig cfg;
    cfg.t_coupled = 2;
    cfg.plateau_patience = 10;
    cfg.lr = 1e-3;

    std::vector<std::string> phases;
    try {
      coupled_train(regs, sw, train, train, cfg, nullptr,
                    [&](const std::string& phase, int epoch) {
                      phases.push_back(phase + std::to_string(epoch));
                    });
    } catch (const std::runtime_error&) {
      // A class can legitimately empty out on this tiny set; the recorded
      // phases before the throw still pin the order.
    }
    REQUIRE(phases.size() >= 3);
    CHECK(phases[0] == "labels1");
    CHECK(phases[1] == "switch1");
    CHECK(phases[2] == "switched1");
  }

  TEST_CASE("oracle-routed switched epoch equals a differential epoch bit for bit") {
    auto build = [] {
      std::vector<Regressor> regs;
      for (int k = 0; k < 3; ++k)
        regs.emplace_back(tiny_spec("R" + std::to_string(k + 1), 3 + 2 * k), 90 + k);
      return regs;
    };
    std::vector<Regressor> diff_regs = build();
    std::vector<Regressor> switched_regs = build();
    const auto train = uniform_batches(6, 0.5, 51);
    TrainConfig cfg;
    cfg.lr = 1e-3;

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 shuffle_rng(17);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    // Record the labels the differential epoch used, then replay them as an
    // oracle router over the same order.
    std::map<size_t, int> recorded;
    differential_epoch(diff_regs, train, order, cfg,
                       [&](size_t idx, int label) { recorded[idx] = label; });
    switched_epoch(switched_regs, train,
                   [&](const TrainingBatch&, size_t idx) { return recorded.at(idx); }, order,
                   cfg);

    for (size_t k = 0; k < 3; ++k)
      CHECK(params_equal(snapshot_params(diff_regs[k].net()),
                         snapshot_params(switched_regs[k].net())));
  }
}

TEST_CASE("train log serializes as TSV") {
  TrainLog log;
  EpochRecord rec;
  rec.stage = "pretrain:R1";
  rec.epoch = 1;
  rec.train_loss = 0.5;
  rec.val_mae = 2.25;
  log.push_back(rec);
  const std::string tsv = train_log_to_tsv(log);
  CHECK(tsv.find("stage\tepoch\ttrain_loss\tval_mae\tswitch_accuracy\te_c") == 0);
  CHECK(tsv.find("pretrain:R1\t1\t0.5\t2.25") != std::string::npos);
}

TEST_CASE("derive_seed separates purposes and indices") {
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 2) == derive_seed(1, "a", 2));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}
