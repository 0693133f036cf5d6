#include "scnn/nn/network.hpp"

#include <random>

namespace scnn::nn {

namespace {
bool is_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}
}  // namespace

template <typename T>
void init_gaussian(Network<T>& net, uint64_t seed, double std_dev) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, std_dev);
  for (auto& p : net.params()) {
    if (is_bias(p.name)) {
      p.value->fill(T(0));
    } else {
      for (T& v : p.value->data) v = static_cast<T>(dist(gen));
    }
    p.grad->fill(T(0));
    p.velocity->fill(T(0));
  }
}

template <typename T>
void sgd_step(const std::vector<ParamView<T>>& params, double lr, double momentum) {
  for (const auto& p : params) {
    for (const T g : p.grad->data) {
      if (!std::isfinite(static_cast<double>(g)))
        throw std::runtime_error("non-finite gradient in parameter " + p.name);
    }
    const T m = static_cast<T>(momentum);
    const T eta = static_cast<T>(lr);
    for (size_t i = 0; i < p.value->data.size(); ++i) {
      T& v = p.velocity->data[i];
      v = m * v + p.grad->data[i];
      p.value->data[i] -= eta * v;
    }
  }
}

template void init_gaussian<float>(Network<float>&, uint64_t, double);
template void init_gaussian<double>(Network<double>&, uint64_t, double);
template void sgd_step<float>(const std::vector<ParamView<float>>&, double, double);
template void sgd_step<double>(const std::vector<ParamView<double>>&, double, double);

}  // namespace scnn::nn
