#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace scnn::nn {

/// Dense (channels, height, width) tensor, row-major within each channel.
/// Vectors are represented as (n, 1, 1).
template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int c, int h, int w, T fill = T(0))
      : channels(c), height(h), width(w),
        data(static_cast<size_t>(c) * h * w, fill) {}

  static Tensor vec(int n, T fill = T(0)) { return Tensor(n, 1, 1, fill); }

  T& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  T at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  void fill(T v) { data.assign(data.size(), v); }
};

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor shape mismatch in operator+");
  Tensor<T> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

}  // namespace scnn::nn
