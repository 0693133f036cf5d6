#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scnn/density_map.hpp"
#include "scnn/image.hpp"
#include "scnn/nn/network.hpp"

namespace scnn {

/// One convolutional stage of a density regressor.
struct ConvStage {
  int kernel = 3;
  int out_channels = 1;
  bool pool_after = false;
};

/// Density regressor architecture: four same-padded convolutions with two 2x2
/// max-pool stages, then a 1x1 single-channel head. ReLU follows every
/// convolution including the head, so outputs are non-negative by
/// construction. The presets differ in initial kernel size (9 / 7 / 5) and so
/// in receptive field.
struct RegressorSpec {
  std::string name;               // "R1", "R2", "R3"
  std::vector<ConvStage> stages;  // exactly 4, exactly 2 pools

  void validate() const;

  static RegressorSpec r1();
  static RegressorSpec r2();
  static RegressorSpec r3();
  /// Preset by name; throws on unknown names.
  static RegressorSpec preset(const std::string& name);
  /// Same stage layout with all channel widths scaled by `factor` (min 1).
  RegressorSpec scaled_channels(double factor) const;
};

nn::Tensor<float> image_to_tensor(const Image& img);

/// Convolutional crowd-density regressor. Forward output is single-channel at
/// ceil(input/4) resolution (two ceil-mode pools).
class Regressor {
 public:
  Regressor() = default;
  /// Gaussian init (std 0.01 by default), zero biases; deterministic under
  /// the seed. init_std rescales the draw for [0,1]-normalized inputs.
  Regressor(const RegressorSpec& spec, uint64_t seed, double init_std = 0.01);

  const RegressorSpec& spec() const { return spec_; }
  uint64_t seed() const { return seed_; }
  nn::Network<float>& net() { return net_; }
  const std::string& name() const { return spec_.name; }

  /// Inference on a grayscale patch in [0,1]. Throws if either input extent
  /// is below kMinInput.
  DensityMap forward_density(const Image& patch);
  DensityMap forward_density(const nn::Tensor<float>& pixels);

  int epoch = 0;  // checkpoint bookkeeping

  static constexpr int kMinInput = 16;

 private:
  RegressorSpec spec_;
  uint64_t seed_ = 0;
  nn::Network<float> net_;
};

/// Eq.-style L2 loss between two density maps: (1/2N) * ||pred - target||^2.
double l2_loss(const DensityMap& pred, const DensityMap& target, int batch_size);

}  // namespace scnn
