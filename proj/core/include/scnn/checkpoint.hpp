#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scnn/regressor.hpp"
#include "scnn/switch_classifier.hpp"

namespace scnn {

/// A loaded checkpoint bundle: the regressors and/or switch saved at the end
/// of one training stage.
struct Checkpoint {
  std::string stage;
  uint64_t seed = 0;
  int epoch = 0;
  std::vector<Regressor> regressors;
  std::optional<SwitchClassifier> switch_classifier;
};

/// Save a bundle as `<stem>.meta` (JSON text sidecar: stage, seed, epoch,
/// architecture specs, named tensor directory) plus `<stem>.raw` (all
/// parameter tensors concatenated as little-endian f32). save -> load -> save
/// reproduces both files byte for byte.
void save_checkpoint(const std::string& stem, const std::string& stage, uint64_t seed,
                     int epoch, const std::vector<Regressor*>& regressors,
                     SwitchClassifier* switch_classifier);

/// Load a bundle; throws with the stem on any missing or malformed file.
Checkpoint load_checkpoint(const std::string& stem);

}  // namespace scnn
