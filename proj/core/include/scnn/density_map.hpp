#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scnn/image.hpp"

namespace scnn {

/// Non-negative 2-D grid of persons-per-cell. Element-wise sum is a crowd
/// count. Values are kept in double; on disk the payload is f32.
struct DensityMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  DensityMap() = default;
  DensityMap(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

  double& at(int r, int c) { return values[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return values.size(); }
  double sum() const;
};

/// Element-wise sum, restricted to mask-true cells when a mask is given.
/// Throws on mask dimension mismatch.
double predicted_count(const DensityMap& dm, const Mask* roi = nullptr);

/// Block-sum downsample by an integer factor. Dimensions that do not divide
/// are zero-padded on the bottom/right first, so total mass is preserved
/// exactly. Output dims are ceil(input / factor). Throws if factor < 1.
DensityMap downsample_preserving_count(const DensityMap& dm, int factor);

DensityMap crop(const DensityMap& dm, int r0, int c0, int h, int w);

/// Two-file serialization: `<stem>.meta` is a line-oriented text sidecar
/// (height, width, dtype f32, byte_order little-endian, layout row-major) and
/// `<stem>.raw` is the row-major payload of 32-bit little-endian floats.
/// save followed by load followed by save reproduces the files byte for byte.
void save_density_map(const std::string& stem, const DensityMap& dm);
DensityMap load_density_map(const std::string& stem);

}  // namespace scnn
