#include "scnn/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scnn {

void RegressorSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("RegressorSpec: empty name");
  if (stages.size() != 4)
    throw std::invalid_argument("RegressorSpec " + name + ": expected exactly 4 conv stages");
  int pools = 0;
  for (const ConvStage& s : stages) {
    if (s.kernel < 1 || s.kernel % 2 == 0)
      throw std::invalid_argument("RegressorSpec " + name + ": kernels must be odd");
    if (s.out_channels < 1)
      throw std::invalid_argument("RegressorSpec " + name + ": channels must be >= 1");
    pools += s.pool_after ? 1 : 0;
  }
  if (pools != 2)
    throw std::invalid_argument("RegressorSpec " + name + ": expected exactly 2 pool stages");
}

RegressorSpec RegressorSpec::r1() {
  return {"R1", {{9, 16, true}, {7, 32, true}, {7, 16, false}, {7, 8, false}}};
}

RegressorSpec RegressorSpec::r2() {
  return {"R2", {{7, 20, true}, {5, 40, true}, {5, 20, false}, {5, 10, false}}};
}

RegressorSpec RegressorSpec::r3() {
  return {"R3", {{5, 24, true}, {3, 48, true}, {3, 24, false}, {3, 12, false}}};
}

RegressorSpec RegressorSpec::preset(const std::string& name) {
  if (name == "R1") return r1();
  if (name == "R2") return r2();
  if (name == "R3") return r3();
  throw std::invalid_argument("unknown regressor preset: " + name);
}

RegressorSpec RegressorSpec::scaled_channels(double factor) const {
  RegressorSpec out = *this;
  for (ConvStage& s : out.stages)
    s.out_channels = std::max(1, static_cast<int>(std::lround(s.out_channels * factor)));
  return out;
}

nn::Tensor<float> image_to_tensor(const Image& img) {
  nn::Tensor<float> t(1, img.height, img.width);
  std::copy(img.pixels.begin(), img.pixels.end(), t.data.begin());
  return t;
}

Regressor::Regressor(const RegressorSpec& spec, uint64_t seed, double init_std)
    : spec_(spec), seed_(seed) {
  spec_.validate();
  int in_c = 1;
  int idx = 0;
  for (const ConvStage& s : spec_.stages) {
    ++idx;
    const std::string base = "conv" + std::to_string(idx);
    net_.add(base, std::make_unique<nn::Conv2d<float>>(in_c, s.out_channels, s.kernel));
    net_.add(base + ".relu", std::make_unique<nn::Relu<float>>());
    if (s.pool_after) net_.add(base + ".pool", std::make_unique<nn::MaxPool2<float>>());
    in_c = s.out_channels;
  }
  net_.add("head", std::make_unique<nn::Conv2d<float>>(in_c, 1, 1));
  net_.add("head.relu", std::make_unique<nn::Relu<float>>());
  nn::init_gaussian(net_, seed, init_std);
}

DensityMap Regressor::forward_density(const Image& patch) {
  return forward_density(image_to_tensor(patch));
}

DensityMap Regressor::forward_density(const nn::Tensor<float>& pixels) {
  if (pixels.height < kMinInput || pixels.width < kMinInput)
    throw std::invalid_argument("regressor input below minimum size " +
                                std::to_string(kMinInput));
  nn::Tensor<float> out = net_.forward(pixels);
  DensityMap dm(out.height, out.width);
  for (size_t i = 0; i < out.data.size(); ++i) dm.values[i] = out.data[i];
  return dm;
}

double l2_loss(const DensityMap& pred, const DensityMap& target, int batch_size) {
  if (pred.height != target.height || pred.width != target.width)
    throw std::invalid_argument("l2_loss: density map dims mismatch");
  if (batch_size < 1) throw std::invalid_argument("l2_loss: batch size must be >= 1");
  double total = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - target.values[i];
    total += d * d;
  }
  return total / (2.0 * batch_size);
}

}  // namespace scnn
