#pragma once

#include <map>
#include <utility>
#include <vector>

#include "scnn/density_map.hpp"
#include "scnn/scene.hpp"

namespace scnn {

/// Non-overlapping patch grid over a frame. Cell boundaries use integer
/// division; the last row/column of cells absorbs any remainder. Cells are
/// half-open, so every pixel and every annotation lands in exactly one cell.
struct GridSpec {
  int rows = 3;
  int cols = 3;

  /// Per-axis split start indices (rows+1 entries: 0 .. frame extent).
  std::vector<int> row_bounds(int frame_height) const;
  std::vector<int> col_bounds(int frame_width) const;
  /// Cell index owning a real-valued coordinate along one axis.
  static int cell_of(const std::vector<int>& bounds, double coord);
};

/// One grid cell cut out of a scene.
struct PatchRecord {
  Image pixels;          // crop of the scene image
  PointSet points;       // annotations local to the crop
  std::optional<Mask> roi;  // crop of the scene ROI, when present
  int grid_row = 0;
  int grid_col = 0;
  std::string scene_id;  // provenance
};

/// Split a scene into rows x cols patches. Throws if the frame has fewer
/// pixels than grid cells along either axis.
std::vector<PatchRecord> split_scene(const Scene& scene, const GridSpec& grid);

/// Crop a full-frame density map into per-cell maps, in row-major cell order.
std::vector<DensityMap> split_density(const DensityMap& dm, const GridSpec& grid);

/// Reassemble per-cell density maps into a full-frame map at 1/factor
/// resolution. Each cell map must have dims ceil(cell_extent / factor); the
/// output dims are the per-axis sums of those. Throws on a missing cell or an
/// inconsistent patch map.
DensityMap assemble_density(const std::map<std::pair<int, int>, DensityMap>& patches,
                            const GridSpec& grid, int frame_height, int frame_width,
                            int factor = 4);

}  // namespace scnn
