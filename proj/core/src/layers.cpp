#include "scnn/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace scnn::nn {

namespace {
template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;
}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel)
    : weight(out_channels, in_channels, kernel * kernel),
      bias(out_channels, 1, 1),
      weight_grad(out_channels, in_channels, kernel * kernel),
      bias_grad(out_channels, 1, 1),
      weight_vel(out_channels, in_channels, kernel * kernel),
      bias_vel(out_channels, 1, 1),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      pad_(kernel / 2) {
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("Conv2d: bad channels");
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("Conv2d: kernel must be odd for same padding");
}

template <typename T>
void Conv2d<T>::im2col(const Tensor<T>& x) {
  const int h = x.height, w = x.width;
  const size_t hw = static_cast<size_t>(h) * w;
  col_.assign(static_cast<size_t>(in_c_) * k_ * k_ * hw, T(0));
  for (int ci = 0; ci < in_c_; ++ci) {
    const T* chan = x.data.data() + static_cast<size_t>(ci) * hw;
    for (int dy = 0; dy < k_; ++dy) {
      for (int dx = 0; dx < k_; ++dx) {
        T* row = col_.data() + (static_cast<size_t>(ci) * k_ * k_ + dy * k_ + dx) * hw;
        const int sy = dy - pad_, sx = dx - pad_;
        const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
        const int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
        for (int y = y0; y < y1; ++y) {
          const T* src = chan + static_cast<size_t>(y + sy) * w + (x0 + sx);
          std::copy(src, src + (x1 - x0), row + static_cast<size_t>(y) * w + x0);
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  if (x.channels != in_c_) throw std::invalid_argument("Conv2d: input channel mismatch");
  input_ = x;
  im2col(x);
  const int h = x.height, w = x.width;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index kdim = static_cast<Eigen::Index>(in_c_) * k_ * k_;

  Tensor<T> out(out_c_, h, w);
  ConstMapRM<T> wm(weight.data.data(), out_c_, kdim);
  ConstMapRM<T> cm(col_.data(), kdim, hw);
  MapRM<T> om(out.data.data(), out_c_, hw);
  om.noalias() = wm * cm;
  for (int oc = 0; oc < out_c_; ++oc) om.row(oc).array() += bias.data[oc];
  return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
  const int h = input_.height, w = input_.width;
  if (dy.channels != out_c_ || dy.height != h || dy.width != w)
    throw std::invalid_argument("Conv2d: gradient shape mismatch");
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index kdim = static_cast<Eigen::Index>(in_c_) * k_ * k_;

  ConstMapRM<T> dym(dy.data.data(), out_c_, hw);
  ConstMapRM<T> cm(col_.data(), kdim, hw);
  MapRM<T> dwm(weight_grad.data.data(), out_c_, kdim);
  dwm.noalias() += dym * cm.transpose();
  for (int oc = 0; oc < out_c_; ++oc) bias_grad.data[oc] += dym.row(oc).sum();

  // dcol = W^T dy, then scatter back (col2im).
  MatrixRM<T> dcol(kdim, hw);
  ConstMapRM<T> wm(weight.data.data(), out_c_, kdim);
  dcol.noalias() = wm.transpose() * dym;

  Tensor<T> dx(in_c_, h, w);
  for (int ci = 0; ci < in_c_; ++ci) {
    T* chan = dx.data.data() + static_cast<size_t>(ci) * hw;
    for (int dyk = 0; dyk < k_; ++dyk) {
      for (int dxk = 0; dxk < k_; ++dxk) {
        const T* row = dcol.data() + (static_cast<size_t>(ci) * k_ * k_ + dyk * k_ + dxk) * hw;
        const int sy = dyk - pad_, sx = dxk - pad_;
        const int y0 = std::max(0, -sy), y1 = std::min(h, h - sy);
        const int x0 = std::max(0, -sx), x1 = std::min(w, w - sx);
        for (int y = y0; y < y1; ++y) {
          T* dst = chan + static_cast<size_t>(y + sy) * w + (x0 + sx);
          const T* src = row + static_cast<size_t>(y) * w + x0;
          for (int i = 0; i < x1 - x0; ++i) dst[i] += src[i];
        }
      }
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad, &weight_vel});
  out.push_back({prefix + ".bias", &bias, &bias_grad, &bias_vel});
}

// ---------------------------------------------------------------------------
// MaxPool2

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
  channels_ = x.channels;
  in_h_ = x.height;
  in_w_ = x.width;
  const int oh = (x.height + 1) / 2, ow = (x.width + 1) / 2;
  Tensor<T> out(x.channels, oh, ow);
  argmax_.assign(out.size(), 0);
  size_t oi = 0;
  for (int c = 0; c < x.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++oi) {
        const int y1 = std::min(2 * oy + 1, x.height - 1);
        const int x1 = std::min(2 * ox + 1, x.width - 1);
        T best = -std::numeric_limits<T>::infinity();
        int best_idx = -1;
        for (int y = 2 * oy; y <= y1; ++y) {
          for (int xx = 2 * ox; xx <= x1; ++xx) {
            const int idx = (c * x.height + y) * x.width + xx;
            if (x.data[idx] > best) {
              best = x.data[idx];
              best_idx = idx;
            }
          }
        }
        out.data[oi] = best;
        argmax_[oi] = best_idx;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& dy) {
  if (dy.size() != argmax_.size()) throw std::invalid_argument("MaxPool2: gradient shape mismatch");
  Tensor<T> dx(channels_, in_h_, in_w_);
  for (size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Relu

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x) {
  Tensor<T> out = x;
  active_.assign(x.size(), 0);
  for (size_t i = 0; i < out.data.size(); ++i) {
    if (out.data[i] > T(0)) {
      active_[i] = 1;
    } else {
      out.data[i] = T(0);
    }
  }
  return out;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& dy) {
  if (dy.size() != active_.size()) throw std::invalid_argument("Relu: gradient shape mismatch");
  Tensor<T> dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i)
    if (!active_[i]) dx.data[i] = T(0);
  return dx;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x) {
  channels_ = x.channels;
  in_h_ = x.height;
  in_w_ = x.width;
  Tensor<T> out(x.channels, 1, 1);
  const size_t hw = static_cast<size_t>(x.height) * x.width;
  for (int c = 0; c < x.channels; ++c) {
    T total = T(0);
    const T* chan = x.data.data() + c * hw;
    for (size_t i = 0; i < hw; ++i) total += chan[i];
    out.data[c] = total / static_cast<T>(hw);
  }
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& dy) {
  if (dy.channels != channels_) throw std::invalid_argument("GlobalAvgPool: gradient mismatch");
  Tensor<T> dx(channels_, in_h_, in_w_);
  const size_t hw = static_cast<size_t>(in_h_) * in_w_;
  for (int c = 0; c < channels_; ++c) {
    const T g = dy.data[c] / static_cast<T>(hw);
    T* chan = dx.data.data() + c * hw;
    for (size_t i = 0; i < hw; ++i) chan[i] = g;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Dense<T>::Dense(int in_features, int out_features)
    : weight(out_features, in_features, 1),
      bias(out_features, 1, 1),
      weight_grad(out_features, in_features, 1),
      bias_grad(out_features, 1, 1),
      weight_vel(out_features, in_features, 1),
      bias_vel(out_features, 1, 1),
      in_n_(in_features),
      out_n_(out_features) {
  if (in_features < 1 || out_features < 1) throw std::invalid_argument("Dense: bad features");
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) {
  if (static_cast<int>(x.size()) != in_n_)
    throw std::invalid_argument("Dense: input size mismatch");
  input_ = x;
  Tensor<T> out = Tensor<T>::vec(out_n_);
  ConstMapRM<T> wm(weight.data.data(), out_n_, in_n_);
  Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> xv(x.data.data(), in_n_);
  Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> ov(out.data.data(), out_n_);
  ov.noalias() = wm * xv;
  for (int i = 0; i < out_n_; ++i) out.data[i] += bias.data[i];
  return out;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& dy) {
  if (static_cast<int>(dy.size()) != out_n_)
    throw std::invalid_argument("Dense: gradient size mismatch");
  ConstMapRM<T> wm(weight.data.data(), out_n_, in_n_);
  Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> dyv(dy.data.data(), out_n_);
  Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> xv(input_.data.data(), in_n_);
  MapRM<T> dwm(weight_grad.data.data(), out_n_, in_n_);
  dwm.noalias() += dyv * xv.transpose();
  for (int i = 0; i < out_n_; ++i) bias_grad.data[i] += dy.data[i];

  Tensor<T> dx(input_.channels, input_.height, input_.width);
  Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> dxv(dx.data.data(), in_n_);
  dxv.noalias() = wm.transpose() * dyv;
  return dx;
}

template <typename T>
void Dense<T>::collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) {
  out.push_back({prefix + ".weight", &weight, &weight_grad, &weight_vel});
  out.push_back({prefix + ".bias", &bias, &bias_grad, &bias_vel});
}

// ---------------------------------------------------------------------------
// ResidualBlock

template <typename T>
ResidualBlock<T>::ResidualBlock(int in_channels, int out_channels)
    : conv1_(in_channels, out_channels, 3),
      conv2_(out_channels, out_channels, 3),
      proj_(in_channels == out_channels ? nullptr
                                        : new Conv2d<T>(in_channels, out_channels, 1)) {}

template <typename T>
ResidualBlock<T>::ResidualBlock(const ResidualBlock& o)
    : conv1_(o.conv1_),
      conv2_(o.conv2_),
      proj_(o.proj_ ? new Conv2d<T>(*o.proj_) : nullptr),
      relu1_(o.relu1_),
      sum_active_(o.sum_active_) {}

template <typename T>
ResidualBlock<T>& ResidualBlock<T>::operator=(const ResidualBlock& o) {
  conv1_ = o.conv1_;
  conv2_ = o.conv2_;
  proj_.reset(o.proj_ ? new Conv2d<T>(*o.proj_) : nullptr);
  relu1_ = o.relu1_;
  sum_active_ = o.sum_active_;
  return *this;
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  Tensor<T> skip = proj_ ? proj_->forward(x) : x;
  Tensor<T> h = relu1_.forward(conv1_.forward(x));
  Tensor<T> pre = conv2_.forward(h);
  if (!pre.same_shape(skip)) throw std::logic_error("ResidualBlock: branch shape mismatch");
  sum_active_.assign(pre.size(), 0);
  for (size_t i = 0; i < pre.data.size(); ++i) {
    pre.data[i] += skip.data[i];
    if (pre.data[i] > T(0)) {
      sum_active_[i] = 1;
    } else {
      pre.data[i] = T(0);
    }
  }
  return pre;
}

template <typename T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& dy) {
  if (dy.size() != sum_active_.size())
    throw std::invalid_argument("ResidualBlock: gradient shape mismatch");
  Tensor<T> dpre = dy;
  for (size_t i = 0; i < dpre.data.size(); ++i)
    if (!sum_active_[i]) dpre.data[i] = T(0);
  Tensor<T> dmain = conv1_.backward(relu1_.backward(conv2_.backward(dpre)));
  Tensor<T> dskip = proj_ ? proj_->backward(dpre) : dpre;
  return dmain + dskip;
}

template <typename T>
void ResidualBlock<T>::collect_params(const std::string& prefix, std::vector<ParamView<T>>& out) {
  conv1_.collect_params(prefix + ".conv1", out);
  conv2_.collect_params(prefix + ".conv2", out);
  if (proj_) proj_->collect_params(prefix + ".proj", out);
}

// ---------------------------------------------------------------------------

template class Conv2d<float>;
template class Conv2d<double>;
template class MaxPool2<float>;
template class MaxPool2<double>;
template class Relu<float>;
template class Relu<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Dense<float>;
template class Dense<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace scnn::nn
