#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scnn/image.hpp"
#include "scnn/nn/network.hpp"

namespace scnn {

/// Feature backbones for the patch classifier. All end in a global average
/// pool, a 512-wide fully connected layer, and an n-way softmax head.
enum class SwitchBackbone { kCnnSmall, kVgg16Style, kVgg19Style, kResnetStyle };

SwitchBackbone parse_backbone(const std::string& name);
std::string backbone_name(SwitchBackbone b);

/// Patch classifier that relays each patch to one density regressor.
/// Labels are 1-based throughout (label k selects regressor k).
class SwitchClassifier {
 public:
  SwitchClassifier() = default;
  SwitchClassifier(SwitchBackbone backbone, int num_classes, int input_size, uint64_t seed,
                   double init_std = 0.01);

  SwitchBackbone backbone() const { return backbone_; }
  int num_classes() const { return num_classes_; }
  int input_size() const { return input_size_; }
  uint64_t seed() const { return seed_; }
  nn::Network<float>& net() { return net_; }

  /// Bilinear resample of a patch to the fixed classifier input resolution.
  nn::Tensor<float> prepare_input(const Image& patch) const;

  /// Class probabilities; sums to 1 within float rounding.
  std::vector<double> forward_probs(const nn::Tensor<float>& input);
  std::vector<double> forward_probs(const Image& patch);

  /// argmax of forward_probs, 1-based; lowest index wins ties.
  int infer_label(const nn::Tensor<float>& input);

  /// One SGD step of softmax cross-entropy toward a 1-based label. Returns the
  /// loss; *correct reports whether the pre-update argmax matched.
  double train_step(const nn::Tensor<float>& input, int label, double lr, double momentum,
                    bool* correct = nullptr);

  int epoch = 0;  // checkpoint bookkeeping

 private:
  SwitchBackbone backbone_ = SwitchBackbone::kCnnSmall;
  int num_classes_ = 3;
  int input_size_ = 224;
  uint64_t seed_ = 0;
  nn::Network<float> net_;
};

}  // namespace scnn
