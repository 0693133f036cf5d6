// Central finite-difference oracle (64-bit) against analytic backprop for
// every layer type, both losses, and an end-to-end density regressor.

#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "scnn/nn/network.hpp"

using namespace scnn::nn;

namespace {

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

double rel_err(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Fills with values bounded away from relu kinks and pool ties.
void fill_random(Tensor<double>& t, std::mt19937_64& rng, double lo = 0.1, double hi = 1.0,
                 bool signed_values = true) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution sign(0.5);
  for (double& v : t.data) v = mag(rng) * (signed_values && sign(rng) ? -1.0 : 1.0);
}

// Scalar objective J = sum(c .* layer(x)) with fixed random c.
struct LayerProbe {
  Layer<double>& layer;
  Tensor<double> x;
  Tensor<double> c;

  double objective() {
    const Tensor<double> y = layer.forward(x);
    double total = 0;
    for (size_t i = 0; i < y.data.size(); ++i) total += c.data[i] * y.data[i];
    return total;
  }

  void check() {
    Tensor<double> y = layer.forward(x);
    REQUIRE(y.size() == c.size());
    for (const auto& p : layer_params()) p.grad->fill(0.0);
    const Tensor<double> dx = layer.backward(c);

    // Input gradients.
    double max_err = 0;
    for (size_t i = 0; i < x.data.size(); ++i) {
      const double saved = x.data[i];
      x.data[i] = saved + kH;
      const double jp = objective();
      x.data[i] = saved - kH;
      const double jm = objective();
      x.data[i] = saved;
      max_err = std::max(max_err, rel_err(dx.data[i], (jp - jm) / (2 * kH)));
    }
    CHECK(max_err < kTol);

    // Parameter gradients (recorded before the perturbation loop re-runs
    // forward passes, which would overwrite caches but not grads).
    max_err = 0;
    for (const auto& p : layer_params()) {
      for (size_t i = 0; i < p.value->data.size(); ++i) {
        const double g = p.grad->data[i];
        const double saved = p.value->data[i];
        p.value->data[i] = saved + kH;
        const double jp = objective();
        p.value->data[i] = saved - kH;
        const double jm = objective();
        p.value->data[i] = saved;
        max_err = std::max(max_err, rel_err(g, (jp - jm) / (2 * kH)));
      }
    }
    CHECK(max_err < kTol);
  }

  std::vector<ParamView<double>> layer_params() {
    std::vector<ParamView<double>> out;
    layer.collect_params("p", out);
    return out;
  }
};

}  // namespace

TEST_CASE("convolution gradients") {
  std::mt19937_64 rng(101);
  Conv2d<double> conv(2, 3, 3);
  fill_random(conv.weight, rng, 0.05, 0.5);
  fill_random(conv.bias, rng, 0.05, 0.2);
  LayerProbe probe{conv, Tensor<double>(2, 6, 6), Tensor<double>(3, 6, 6)};
  fill_random(probe.x, rng);
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("max pool gradients (odd extent exercises ceil windows)") {
  std::mt19937_64 rng(102);
  MaxPool2<double> pool;
  LayerProbe probe{pool, Tensor<double>(2, 5, 5), Tensor<double>(2, 3, 3)};
  fill_random(probe.x, rng);
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("relu gradients") {
  std::mt19937_64 rng(103);
  Relu<double> relu;
  LayerProbe probe{relu, Tensor<double>(2, 4, 4), Tensor<double>(2, 4, 4)};
  fill_random(probe.x, rng);  // |x| >= 0.1 keeps the kink away from +/- kH
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("global average pool gradients") {
  std::mt19937_64 rng(104);
  GlobalAvgPool<double> gap;
  LayerProbe probe{gap, Tensor<double>(3, 4, 5), Tensor<double>::vec(3)};
  fill_random(probe.x, rng);
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("dense gradients") {
  std::mt19937_64 rng(105);
  Dense<double> fc(12, 7);
  fill_random(fc.weight, rng, 0.05, 0.5);
  fill_random(fc.bias, rng, 0.05, 0.2);
  LayerProbe probe{fc, Tensor<double>::vec(12), Tensor<double>::vec(7)};
  fill_random(probe.x, rng);
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("residual block gradients (with projection skip)") {
  std::mt19937_64 rng(106);
  ResidualBlock<double> block(2, 3);
  {
    std::vector<ParamView<double>> params;
    block.collect_params("b", params);
    for (auto& p : params) fill_random(*p.value, rng, 0.05, 0.4);
  }
  LayerProbe probe{block, Tensor<double>(2, 5, 5), Tensor<double>(3, 5, 5)};
  fill_random(probe.x, rng);
  fill_random(probe.c, rng);
  probe.check();
}

TEST_CASE("l2 density loss gradient") {
  std::mt19937_64 rng(107);
  Tensor<double> pred(1, 4, 4), target(1, 4, 4), mask(1, 4, 4, 1.0);
  fill_random(pred, rng);
  fill_random(target, rng);
  mask.data[3] = mask.data[9] = 0.0;
  for (const Tensor<double>* m : {static_cast<const Tensor<double>*>(nullptr), &mask}) {
    Tensor<double> dpred;
    l2_density_loss(pred, target, 2, m, &dpred);
    double max_err = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
      const double saved = pred.data[i];
      pred.data[i] = saved + kH;
      const double jp = l2_density_loss(pred, target, 2, m);
      pred.data[i] = saved - kH;
      const double jm = l2_density_loss(pred, target, 2, m);
      pred.data[i] = saved;
      max_err = std::max(max_err, rel_err(dpred.data[i], (jp - jm) / (2 * kH)));
    }
    CHECK(max_err < kTol);
  }
}

TEST_CASE("softmax cross-entropy gradient") {
  std::mt19937_64 rng(108);
  Tensor<double> logits = Tensor<double>::vec(5);
  fill_random(logits, rng, 0.1, 2.0);
  for (int label = 0; label < 5; ++label) {
    Tensor<double> dlogits;
    softmax_cross_entropy(logits, label, &dlogits);
    double max_err = 0;
    for (size_t i = 0; i < logits.data.size(); ++i) {
      const double saved = logits.data[i];
      logits.data[i] = saved + kH;
      const double jp = softmax_cross_entropy(logits, label);
      logits.data[i] = saved - kH;
      const double jm = softmax_cross_entropy(logits, label);
      logits.data[i] = saved;
      max_err = std::max(max_err, rel_err(dlogits.data[i], (jp - jm) / (2 * kH)));
    }
    CHECK(max_err < kTol);
  }
}

TEST_CASE("end-to-end regressor stack with l2 loss on a 16x16 input") {
  std::mt19937_64 rng(109);
  Network<double> net;
  net.add("conv1", std::make_unique<Conv2d<double>>(1, 3, 3));
  net.add("relu1", std::make_unique<Relu<double>>());
  net.add("pool1", std::make_unique<MaxPool2<double>>());
  net.add("conv2", std::make_unique<Conv2d<double>>(3, 2, 3));
  net.add("relu2", std::make_unique<Relu<double>>());
  net.add("pool2", std::make_unique<MaxPool2<double>>());
  net.add("conv3", std::make_unique<Conv2d<double>>(2, 2, 3));
  net.add("relu3", std::make_unique<Relu<double>>());
  net.add("head", std::make_unique<Conv2d<double>>(2, 1, 1));
  net.add("head_relu", std::make_unique<Relu<double>>());
  // Wide init keeps pre-activations clear of relu kinks for the probe.
  for (auto& p : net.params()) fill_random(*p.value, rng, 0.05, 0.4);

  Tensor<double> x(1, 16, 16);
  fill_random(x, rng, 0.1, 1.0, /*signed_values=*/false);
  Tensor<double> target(1, 4, 4);
  fill_random(target, rng, 0.1, 1.0, false);

  const auto objective = [&] {
    const Tensor<double> out = net.forward(x);
    return l2_density_loss(out, target, 1);
  };

  Tensor<double> out = net.forward(x);
  Tensor<double> dout;
  l2_density_loss(out, target, 1, nullptr, &dout);
  net.zero_grads();
  net.backward(dout);

  std::vector<std::vector<double>> grads;
  for (const auto& p : net.params()) grads.push_back(p.grad->data);

  double max_err = 0;
  size_t checked = 0;
  auto params = net.params();
  for (size_t t = 0; t < params.size(); ++t) {
    for (size_t i = 0; i < params[t].value->data.size(); ++i) {
      double& v = params[t].value->data[i];
      const double saved = v;
      v = saved + kH;
      const double jp = objective();
      v = saved - kH;
      const double jm = objective();
      v = saved;
      max_err = std::max(max_err, rel_err(grads[t][i], (jp - jm) / (2 * kH)));
      ++checked;
    }
  }
  INFO("checked ", checked, " parameters, max rel err ", max_err);
  CHECK(max_err < kTol);
}
