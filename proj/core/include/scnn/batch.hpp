#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scnn/dataset.hpp"
#include "scnn/density_map.hpp"
#include "scnn/ground_truth.hpp"
#include "scnn/grid.hpp"
#include "scnn/nn/tensor.hpp"

namespace scnn {

/// One training/evaluation unit: a grid patch with its quarter-resolution
/// density target. Targets are crops of the full-scene ground-truth map, so
/// kernel mass that spills across cell borders stays where it landed.
struct TrainingBatch {
  nn::Tensor<float> pixels;         // (1, h, w) grayscale in [0, 1]
  nn::Tensor<float> switch_pixels;  // resized to the classifier input size
  DensityMap target;                // 1/factor scale
  nn::Tensor<float> target_t;       // float copy of target for the loss
  std::optional<Mask> roi;          // 1/factor scale
  std::optional<nn::Tensor<float>> roi_t;
  PointSet points;                  // annotations local to the patch
  double gt_count = 0.0;            // ROI-masked target mass
  double interhead10 = 0.0;         // patch_mean_interhead_distance, k = 10
  std::string scene_id;
  int scene_index = 0;
  int grid_row = 0;
  int grid_col = 0;
};

struct PreparedScene {
  std::string id;
  int frame_height = 0;
  int frame_width = 0;
  double gt_count = 0.0;            // sum of its patches' gt_count
  std::vector<size_t> batch_indices;
};

struct PreparedDataset {
  std::vector<TrainingBatch> batches;
  std::vector<PreparedScene> scenes;
  GridSpec grid;
  int factor = 4;

  size_t size() const { return batches.size(); }
};

struct PrepareOptions {
  KernelConfig kernel;
  GridSpec grid{3, 3};
  int factor = 4;
  int switch_input_size = 224;
};

/// Ground-truth generation + patching for a scene list. Scenes with an
/// all-false ROI are rejected.
PreparedDataset prepare_dataset(const std::vector<Scene>& scenes, const PrepareOptions& opts);

/// Sum of a single-channel density tensor, restricted to mask-true cells.
double masked_count(const nn::Tensor<float>& density, const Mask* roi);

}  // namespace scnn
