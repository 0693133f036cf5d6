#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scnn/nn/layers.hpp"

namespace scnn::nn {

/// Sequential layer stack with named layers. Copying deep-clones layers.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(const Network& o) { *this = o; }
  Network& operator=(const Network& o) {
    layers_.clear();
    for (const auto& [name, layer] : o.layers_) layers_.emplace_back(name, layer->clone());
    return *this;
  }
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  void add(std::string name, std::unique_ptr<Layer<T>> layer) {
    layers_.emplace_back(std::move(name), std::move(layer));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (auto& [name, layer] : layers_) h = layer->forward(h);
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->second->backward(g);
    return g;
  }

  std::vector<ParamView<T>> params() {
    std::vector<ParamView<T>> out;
    for (auto& [name, layer] : layers_) layer->collect_params(name, out);
    return out;
  }

  void zero_grads() {
    for (auto& p : params()) p.grad->fill(T(0));
  }

  size_t num_layers() const { return layers_.size(); }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer<T>>>> layers_;
};

/// Draw weights i.i.d. N(0, std^2); biases (names ending ".bias") zero.
/// Deterministic for a given seed.
template <typename T>
void init_gaussian(Network<T>& net, uint64_t seed, double std_dev = 0.01);

/// Momentum SGD: v <- momentum*v + g; p <- p - lr*v.
/// Throws on a non-finite gradient, naming the parameter.
template <typename T>
void sgd_step(const std::vector<ParamView<T>>& params, double lr, double momentum);

/// Eq.-style L2 density loss: (1 / 2N) * sum of squared cell differences,
/// optionally restricted to mask-true cells. Writes d(loss)/d(pred) when
/// dpred is non-null. Throws on shape mismatch.
template <typename T>
T l2_density_loss(const Tensor<T>& pred, const Tensor<T>& target, int batch_size,
                  const Tensor<T>* mask = nullptr, Tensor<T>* dpred = nullptr) {
  if (!pred.same_shape(target)) throw std::invalid_argument("l2 loss: shape mismatch");
  if (mask && !mask->same_shape(pred)) throw std::invalid_argument("l2 loss: mask mismatch");
  if (batch_size < 1) throw std::invalid_argument("l2 loss: batch size must be >= 1");
  if (dpred) *dpred = Tensor<T>(pred.channels, pred.height, pred.width);
  T total = T(0);
  const T inv_n = T(1) / static_cast<T>(batch_size);
  for (size_t i = 0; i < pred.data.size(); ++i) {
    T d = pred.data[i] - target.data[i];
    if (mask && mask->data[i] == T(0)) d = T(0);
    total += d * d;
    if (dpred) dpred->data[i] = d * inv_n;
  }
  return total * inv_n / T(2);
}

/// Numerically stable softmax over a flat tensor.
template <typename T>
std::vector<T> softmax(const Tensor<T>& logits) {
  T mx = logits.data[0];
  for (T v : logits.data) mx = std::max(mx, v);
  std::vector<T> p(logits.size());
  T total = T(0);
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits.data[i] - mx);
    total += p[i];
  }
  for (T& v : p) v /= total;
  return p;
}

/// Softmax cross-entropy against a 0-based class index. Writes d(loss)/d(logits).
template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, int class_index, Tensor<T>* dlogits = nullptr) {
  if (class_index < 0 || class_index >= static_cast<int>(logits.size()))
    throw std::invalid_argument("cross entropy: class index out of range");
  const std::vector<T> p = softmax(logits);
  if (dlogits) {
    *dlogits = Tensor<T>::vec(static_cast<int>(p.size()));
    for (size_t i = 0; i < p.size(); ++i) dlogits->data[i] = p[i];
    dlogits->data[class_index] -= T(1);
  }
  const T eps = std::numeric_limits<T>::min();
  return -std::log(std::max(p[static_cast<size_t>(class_index)], eps));
}

/// Index of the largest element; the lowest index wins ties.
template <typename T>
int argmax(const std::vector<T>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace scnn::nn
