#include "doctest.h"

#include <random>

#include "scnn/checkpoint.hpp"
#include "scnn/density_map.hpp"
#include "test_util.hpp"

using namespace scnn;
using namespace scnn::test;

TEST_SUITE("density map serialization") {
  TEST_CASE("bit-exact file round trip") {
    const auto dir = scratch_dir("density_io");
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(0, 3);
    DensityMap dm(17, 23);
    for (double& v : dm.values) v = uni(rng);

    const std::string stem = (dir / "map").string();
    save_density_map(stem, dm);
    const DensityMap loaded = load_density_map(stem);
    CHECK(loaded.height == dm.height);
    CHECK(loaded.width == dm.width);

    const std::string stem2 = (dir / "map2").string();
    save_density_map(stem2, loaded);
    CHECK(slurp(stem + ".raw") == slurp(stem2 + ".raw"));
    CHECK(slurp(stem + ".meta") == slurp(stem2 + ".meta"));

    // Values survive exactly at f32 precision.
    for (size_t i = 0; i < dm.values.size(); ++i)
      CHECK(loaded.values[i] == static_cast<double>(static_cast<float>(dm.values[i])));
  }

  TEST_CASE("sidecar declares the format") {
    const auto dir = scratch_dir("density_meta");
    save_density_map((dir / "m").string(), DensityMap(2, 3, 1.0));
    const std::string meta = slurp(dir / "m.meta");
    CHECK(meta.find("height 2") != std::string::npos);
    CHECK(meta.find("width 3") != std::string::npos);
    CHECK(meta.find("dtype f32") != std::string::npos);
    CHECK(meta.find("byte_order little-endian") != std::string::npos);
    CHECK(meta.find("layout row-major") != std::string::npos);
  }

  TEST_CASE("missing files raise") {
    CHECK_THROWS_AS(load_density_map("/nonexistent/stem"), std::runtime_error);
  }
}

TEST_SUITE("checkpoint serialization") {
  TEST_CASE("regressors plus switch round trip bitwise") {
    const auto dir = scratch_dir("ckpt");
    Regressor r1(tiny_spec("R1", 9), 7);
    Regressor r2(tiny_spec("R2", 7), 8);
    SwitchClassifier sw(SwitchBackbone::kCnnSmall, 2, 24, 9);
    r1.epoch = 3;
    sw.epoch = 5;

    const std::string stem = (dir / "stage").string();
    save_checkpoint(stem, "pretrain", 123, 3, {&r1, &r2}, &sw);
    Checkpoint ck = load_checkpoint(stem);
    CHECK(ck.stage == "pretrain");
    CHECK(ck.seed == 123);
    CHECK(ck.epoch == 3);
    REQUIRE(ck.regressors.size() == 2);
    REQUIRE(ck.switch_classifier.has_value());
    CHECK(ck.regressors[0].name() == "R1");
    CHECK(ck.regressors[0].epoch == 3);
    CHECK(ck.switch_classifier->num_classes() == 2);
    CHECK(ck.switch_classifier->input_size() == 24);
    CHECK(ck.switch_classifier->epoch == 5);

    CHECK(params_equal(snapshot_params(r1.net()), snapshot_params(ck.regressors[0].net())));
    CHECK(params_equal(snapshot_params(r2.net()), snapshot_params(ck.regressors[1].net())));
    CHECK(params_equal(snapshot_params(sw.net()),
                       snapshot_params(ck.switch_classifier->net())));

    // save -> load -> save reproduces the files byte for byte.
    const std::string stem2 = (dir / "stage2").string();
    std::vector<Regressor*> regs{&ck.regressors[0], &ck.regressors[1]};
    save_checkpoint(stem2, "pretrain", 123, 3, regs, &*ck.switch_classifier);
    CHECK(slurp(stem + ".raw") == slurp(stem2 + ".raw"));
    CHECK(slurp(stem + ".meta") == slurp(stem2 + ".meta"));
  }

  TEST_CASE("loading a truncated payload fails") {
    const auto dir = scratch_dir("ckpt_bad");
    Regressor r1(tiny_spec("R1"), 1);
    const std::string stem = (dir / "c").string();
    save_checkpoint(stem, "pretrain", 1, 0, {&r1}, nullptr);
    std::filesystem::resize_file(stem + ".raw", 8);
    CHECK_THROWS_AS(load_checkpoint(stem), std::runtime_error);
  }

  TEST_CASE("missing checkpoint names the stem") {
    CHECK_THROWS_WITH_AS(load_checkpoint("/no/such/ckpt"), doctest::Contains("/no/such/ckpt"),
                         std::runtime_error);
  }
}
