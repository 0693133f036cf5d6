#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scnn/nn/tensor.hpp"

namespace scnn::nn {

/// Named view over one trainable tensor and its gradient / momentum buffers.
template <typename T>
struct ParamView {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
  Tensor<T>* velocity;
};

/// Backprop layer. forward() caches whatever backward() needs, so a layer
/// instance belongs to one pass at a time; concurrent use requires clones.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  /// Gradient w.r.t. the input of the last forward; accumulates param grads.
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) {}
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

/// 2-D convolution, stride 1, zero "same" padding (odd kernels only), so only
/// pooling changes resolution.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_channels, int out_channels, int kernel);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Conv2d>(*this);
  }

  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }
  int kernel() const { return k_; }

  Tensor<T> weight;  // (out_c, in_c, k*k): row oc of the (out_c x in_c*k*k) matrix
  Tensor<T> bias;    // (out_c, 1, 1)
  Tensor<T> weight_grad, bias_grad;
  Tensor<T> weight_vel, bias_vel;

 private:
  void im2col(const Tensor<T>& x);
  int in_c_, out_c_, k_, pad_;
  Tensor<T> input_;          // cached for backward
  std::vector<T> col_;       // (in_c*k*k) x (h*w) scratch, reused
};

/// 2x2 max pooling, stride 2, ceil mode: odd trailing rows/cols form their own
/// (partial) windows, so two pools shrink any extent d to ceil(d / 4).
template <typename T>
class MaxPool2 final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<MaxPool2>(*this);
  }

 private:
  int in_h_ = 0, in_w_ = 0, channels_ = 0;
  std::vector<int> argmax_;  // flat input index per output cell; first max wins ties
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Relu>(*this);
  }

 private:
  std::vector<char> active_;
};

/// Mean over the spatial extent per channel: (c, h, w) -> (c, 1, 1).
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<GlobalAvgPool>(*this);
  }

 private:
  int in_h_ = 0, in_w_ = 0, channels_ = 0;
};

/// Fully connected layer on the flattened input.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(int in_features, int out_features);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<Dense>(*this);
  }

  Tensor<T> weight;  // (out, in, 1)
  Tensor<T> bias;    // (out, 1, 1)
  Tensor<T> weight_grad, bias_grad;
  Tensor<T> weight_vel, bias_vel;

 private:
  int in_n_, out_n_;
  Tensor<T> input_;
};

/// conv3x3 -> relu -> conv3x3 plus a skip connection (1x1 projection when the
/// channel count changes), relu after the sum.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  ResidualBlock(int in_channels, int out_channels);
  ResidualBlock(const ResidualBlock& o);
  ResidualBlock& operator=(const ResidualBlock& o);
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) override;
  std::unique_ptr<Layer<T>> clone() const override {
    return std::make_unique<ResidualBlock>(*this);
  }

 private:
  Conv2d<T> conv1_, conv2_;
  std::unique_ptr<Conv2d<T>> proj_;  // null for identity skip
  Relu<T> relu1_;
  std::vector<char> sum_active_;
};

}  // namespace scnn::nn
