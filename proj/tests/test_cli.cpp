// End-to-end checks of the command-line driver on a miniature dataset.
// SCNN_CLI_PATH is injected by the build.

#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "scnn/dataset.hpp"
#include "test_util.hpp"

using namespace scnn;
using namespace scnn::test;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& log_path = "/dev/null") {
  const std::string cmd = std::string(SCNN_CLI_PATH) + " " + args + " >" + log_path + " 2>&1";
  return std::system(cmd.c_str());
}

// Miniature dataset + the flag block shared by train/evaluate commands.
struct MiniRun {
  fs::path dir;
  std::string data_flags;
  std::string train_flags;

  explicit MiniRun(const std::string& tag) : dir(scratch_dir(tag)) {
    REQUIRE(run("synth --out " + (dir / "data").string() +
                " --scenes 12 --height 48 --width 48 --seed 5") == 0);
    data_flags = " --manifest " + (dir / "data/manifest.json").string() +
                 " --train-frac 0.67 --val-frac 0.165 --test-frac 0.165 --split-seed 2" +
                 " --switch-input 16";
    train_flags = " --tp 2 --td 2 --tc 2 --patience 5 --lr 0.001 --switch-lr 0.01 --seed 9";
  }
};

}  // namespace

TEST_SUITE("cli" * doctest::timeout(600)) {
  TEST_CASE("full staged run writes four checkpoint bundles and is deterministic") {
    MiniRun mini("cli_full");
    const std::string out1 = (mini.dir / "run1").string();
    const std::string out2 = (mini.dir / "run2").string();
    REQUIRE(run("train --stage full" + mini.data_flags + mini.train_flags + " --out " + out1) ==
            0);
    for (const char* stem : {"pretrain", "differential", "coupled", "switch"}) {
      CHECK(fs::exists(out1 + "/" + stem + ".meta"));
      CHECK(fs::exists(out1 + "/" + stem + ".raw"));
    }
    CHECK(fs::exists(out1 + "/train_log.tsv"));

    REQUIRE(run("train --stage full" + mini.data_flags + mini.train_flags + " --out " + out2) ==
            0);
    for (const char* stem : {"pretrain", "differential", "coupled", "switch"}) {
      CHECK(slurp(out1 + "/" + stem + ".raw") == slurp(out2 + "/" + stem + ".raw"));
      CHECK(slurp(out1 + "/" + stem + ".meta") == slurp(out2 + "/" + stem + ".meta"));
    }

    SUBCASE("evaluate prints a report and honors oracle routing") {
      const std::string rep = (mini.dir / "report.txt").string();
      REQUIRE(run("evaluate" + mini.data_flags + " --checkpoints " + out1 + " --report " + rep,
                  (mini.dir / "eval.log").string()) == 0);
      const std::string text = slurp(rep);
      CHECK(text.find("mae ") == 0);
      CHECK(text.find("ideal_switch_mae") != std::string::npos);

      REQUIRE(run("evaluate" + mini.data_flags + " --checkpoints " + out1 +
                      " --oracle-routing --report " + rep + ".oracle") == 0);
      CHECK(slurp(rep + ".oracle").find("ideal_switch_mae") != std::string::npos);

      // Identical flags, identical bytes.
      REQUIRE(run("evaluate" + mini.data_flags + " --checkpoints " + out1 + " --report " + rep +
                  ".again") == 0);
      CHECK(slurp(rep) == slurp(rep + ".again"));
    }

    SUBCASE("infer writes an assembled density map") {
      const std::string img = (mini.dir / "data/images/s0003.png").string();
      const std::string stem = (mini.dir / "inferred").string();
      REQUIRE(run("infer --image " + img + " --checkpoints " + out1 + " --switch-input 16" +
                      " --out " + stem,
                  (mini.dir / "infer.log").string()) == 0);
      CHECK(fs::exists(stem + ".meta"));
      CHECK(fs::exists(stem + ".raw"));
      const std::string log = slurp(mini.dir / "infer.log");
      CHECK(log.find("count ") != std::string::npos);
    }

    SUBCASE("histogram emits a table and a chart") {
      const std::string table = (mini.dir / "hist.tsv").string();
      const std::string png = (mini.dir / "hist.png").string();
      REQUIRE(run("histogram" + mini.data_flags + " --checkpoints " + out1 + " --table " +
                  table + " --png " + png) == 0);
      CHECK(slurp(table).find("bin_lo\tbin_hi\tR1\tR2\tR3") == 0);
      CHECK(fs::exists(png));
    }
  }

  TEST_CASE("staged prerequisites are enforced and resuming works") {
    MiniRun mini("cli_stages");
    const std::string out = (mini.dir / "run").string();
    const std::string log = (mini.dir / "err.log").string();
    // Coupled without differential: fails naming the missing checkpoint.
    CHECK(run("train --stage coupled" + mini.data_flags + mini.train_flags + " --out " + out,
              log) != 0);
    CHECK(slurp(log).find("differential.meta") != std::string::npos);

    REQUIRE(run("train --stage pretrain" + mini.data_flags + mini.train_flags + " --out " +
                out) == 0);
    REQUIRE(run("train --stage differential" + mini.data_flags + mini.train_flags + " --out " +
                out) == 0);
    REQUIRE(run("train --stage coupled" + mini.data_flags + mini.train_flags + " --out " +
                out) == 0);
    CHECK(fs::exists(out + "/switch.meta"));
  }

  TEST_CASE("generate-gt writes one file pair per scene with conserved mass") {
    MiniRun mini("cli_gt");
    const std::string gt_dir = (mini.dir / "gt").string();
    const std::string log = (mini.dir / "gt.log").string();
    REQUIRE(run("generate-gt --manifest " + (mini.dir / "data/manifest.json").string() +
                    " --out " + gt_dir,
                log) == 0);
    const std::vector<Scene> scenes = load_dataset((mini.dir / "data/manifest.json").string());
    for (const Scene& s : scenes) {
      REQUIRE(fs::exists(gt_dir + "/" + s.id + ".meta"));
      const DensityMap dm = load_density_map(gt_dir + "/" + s.id);
      CHECK(std::abs(dm.sum() - static_cast<double>(s.annotations.count())) <=
            1e-3 * std::max<size_t>(1, s.annotations.count()));
    }

    SUBCASE("fixed and adaptive modes agree on mass but not on spread") {
      const std::string fixed_dir = (mini.dir / "gt_fixed").string();
      REQUIRE(run("generate-gt --manifest " + (mini.dir / "data/manifest.json").string() +
                  " --out " + fixed_dir + " --kernel-mode fixed --sigma 2.0") == 0);
      bool any_peak_differs = false;
      for (const Scene& s : scenes) {
        if (s.annotations.count() == 0) continue;
        const DensityMap a = load_density_map(gt_dir + "/" + s.id);
        const DensityMap f = load_density_map(fixed_dir + "/" + s.id);
        CHECK(a.sum() == doctest::Approx(f.sum()).epsilon(1e-3));
        const double peak_a = *std::max_element(a.values.begin(), a.values.end());
        const double peak_f = *std::max_element(f.values.begin(), f.values.end());
        if (std::abs(peak_a - peak_f) > 1e-6) any_peak_differs = true;
      }
      CHECK(any_peak_differs);
    }
  }

  TEST_CASE("bad manifest fails with nonzero status and no partial output") {
    const auto dir = scratch_dir("cli_bad_manifest");
    write_png_gray((dir / "img.png").string(), Image(32, 32, 0.5f));
    {
      std::ofstream mf(dir / "manifest.json");
      mf << R"({"scenes":[{"id":"oob","image":"img.png","annotations":[[32.0, 0.0]]}]})";
    }
    const std::string gt_dir = (dir / "gt").string();
    CHECK(run("generate-gt --manifest " + (dir / "manifest.json").string() + " --out " + gt_dir,
              (dir / "log.txt").string()) != 0);
    CHECK_FALSE(fs::exists(gt_dir));
  }

  TEST_CASE("unknown flags are rejected") {
    CHECK(run("train --no-such-flag") != 0);
    CHECK(run("definitely-not-a-command") != 0);
  }

  TEST_CASE("config file supplies flags with command-line override") {
    MiniRun mini("cli_config");
    const std::string cfg_path = (mini.dir / "run.ini").string();
    {
      std::ofstream cfg(cfg_path);
      cfg << "[synth]\n"
          << "out = " << (mini.dir / "cfg_data").string() << "\n"
          << "scenes = 3\nheight = 48\nwidth = 48\nseed = 4\n";
    }
    REQUIRE(run("--config " + cfg_path + " synth") == 0);
    CHECK(load_dataset((mini.dir / "cfg_data/manifest.json").string()).size() == 3);
  }
}
