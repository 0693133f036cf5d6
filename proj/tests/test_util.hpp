#pragma once

// Shared helpers for the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "scnn/batch.hpp"
#include "scnn/nn/network.hpp"
#include "scnn/regressor.hpp"

namespace scnn::test {

inline std::vector<std::vector<float>> snapshot_params(nn::Network<float>& net) {
  std::vector<std::vector<float>> out;
  for (const auto& p : net.params()) out.push_back(p.value->data);
  return out;
}

inline bool params_equal(const std::vector<std::vector<float>>& a,
                         const std::vector<std::vector<float>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline void zero_params(nn::Network<float>& net) {
  for (const auto& p : net.params()) p.value->fill(0.0f);
}

/// Hand-built batch: constant pixels, constant target cells, no ROI.
/// Target dims follow the ceil(input/4) rule.
inline TrainingBatch make_batch(int h, int w, float pixel_value, double target_cell_value,
                                const std::string& scene_id = "t", int scene_index = 0) {
  TrainingBatch b;
  b.pixels = nn::Tensor<float>(1, h, w, pixel_value);
  b.switch_pixels = b.pixels;
  const int th = (h + 3) / 4, tw = (w + 3) / 4;
  b.target = DensityMap(th, tw, target_cell_value);
  b.target_t = nn::Tensor<float>(1, th, tw, static_cast<float>(target_cell_value));
  b.points.frame_height = h;
  b.points.frame_width = w;
  b.gt_count = b.target.sum();
  b.scene_id = scene_id;
  b.scene_index = scene_index;
  return b;
}

/// Tiny single-regime 4-stage regressor spec for fast tests.
inline RegressorSpec tiny_spec(const std::string& name, int k0 = 5) {
  RegressorSpec s;
  s.name = name;
  s.stages = {{k0, 4, true}, {3, 6, true}, {3, 4, false}, {3, 2, false}};
  return s;
}

/// Patch pixels filled with seeded uniform noise.
inline nn::Tensor<float> noise_tensor(int h, int w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  nn::Tensor<float> t(1, h, w);
  for (float& v : t.data) v = uni(rng);
  return t;
}

/// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("scnn_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace scnn::test
