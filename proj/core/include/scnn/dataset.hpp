#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scnn/grid.hpp"
#include "scnn/scene.hpp"

namespace scnn {

/// One synthetic crowd regime: how densely people occur, how large they
/// render, and how strong the background texture is. Regimes with larger
/// people have sparser crowds, so receptive-field differences matter.
struct RegimeConfig {
  std::string name;
  double density_lo = 0.0;   // persons per px^2
  double density_hi = 0.0;
  double radius_lo = 1.0;    // rendered blob radius, px
  double radius_hi = 2.0;
  double texture_amp = 0.1;  // background texture amplitude in [0,1]
};

/// Synthetic dataset layout: each grid cell of each scene is assigned one
/// regime at random, then populated and rendered independently.
struct SynthConfig {
  int num_scenes = 90;
  int frame_height = 120;
  int frame_width = 120;
  GridSpec grid{3, 3};
  std::vector<RegimeConfig> regimes;
  uint64_t seed = 0;

  void validate() const;
  /// Three-regime (sparse / medium / dense) configuration sized for CPU runs.
  static SynthConfig desk_default(uint64_t seed = 17);
};

/// Deterministic under cfg.seed. Throws on an infeasible density (more than
/// one person per 4 px^2 of cell area).
std::vector<Scene> generate_synthetic(const SynthConfig& cfg);

struct DatasetSplit {
  std::vector<Scene> train, val, test;
};

/// Seeded shuffle split. Fractions must sum to 1 (1e-9 tolerance); the splits
/// are disjoint and exhaustive.
DatasetSplit split_dataset(const std::vector<Scene>& scenes, double train_frac,
                           double val_frac, double test_frac, uint64_t seed);

/// k-fold cross-validation splits: (train, test) per fold.
std::vector<std::pair<std::vector<Scene>, std::vector<Scene>>> kfold_splits(
    const std::vector<Scene>& scenes, int k, uint64_t seed);

/// Manifest-driven loading. The manifest is a JSON document listing scene
/// records (id, image path, [row, col] annotation pairs, optional ROI path);
/// paths are relative to the manifest's directory. Scenes are returned in id
/// order. Malformed records raise errors naming the offending scene.
std::vector<Scene> load_dataset(const std::string& manifest_path);

/// Writes images/ (8-bit grayscale PNG), roi/ (1-bit PNG) and the manifest.
void save_dataset(const std::string& manifest_path, const std::vector<Scene>& scenes);

}  // namespace scnn
