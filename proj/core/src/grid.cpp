#include "scnn/grid.hpp"

#include <stdexcept>

namespace scnn {
namespace {

std::vector<int> bounds_for(int extent, int cells) {
  if (cells < 1) throw std::invalid_argument("grid must have at least one cell per axis");
  if (extent < cells) throw std::invalid_argument("frame too small for grid");
  const int base = extent / cells;  // last cell absorbs the remainder
  std::vector<int> b(static_cast<size_t>(cells) + 1);
  for (int i = 0; i < cells; ++i) b[i] = i * base;
  b[cells] = extent;
  return b;
}

}  // namespace

std::vector<int> GridSpec::row_bounds(int frame_height) const {
  return bounds_for(frame_height, rows);
}

std::vector<int> GridSpec::col_bounds(int frame_width) const {
  return bounds_for(frame_width, cols);
}

int GridSpec::cell_of(const std::vector<int>& bounds, double coord) {
  // Half-open cells [b[i], b[i+1]); a coordinate on an interior boundary
  // belongs to the higher-index cell.
  const int cells = static_cast<int>(bounds.size()) - 1;
  for (int i = cells - 1; i >= 0; --i)
    if (coord >= bounds[i]) return i;
  throw std::invalid_argument("coordinate below frame origin");
}

std::vector<PatchRecord> split_scene(const Scene& scene, const GridSpec& grid) {
  scene.validate();
  const auto rb = grid.row_bounds(scene.image.height);
  const auto cb = grid.col_bounds(scene.image.width);

  std::vector<PatchRecord> patches;
  patches.reserve(static_cast<size_t>(grid.rows) * grid.cols);
  for (int gr = 0; gr < grid.rows; ++gr) {
    for (int gc = 0; gc < grid.cols; ++gc) {
      PatchRecord rec;
      rec.grid_row = gr;
      rec.grid_col = gc;
      rec.scene_id = scene.id;
      const int h = rb[gr + 1] - rb[gr];
      const int w = cb[gc + 1] - cb[gc];
      rec.pixels = crop(scene.image, rb[gr], cb[gc], h, w);
      if (scene.roi) rec.roi = crop(*scene.roi, rb[gr], cb[gc], h, w);
      rec.points.frame_height = h;
      rec.points.frame_width = w;
      patches.push_back(std::move(rec));
    }
  }
  for (const Point& p : scene.annotations.points) {
    const int gr = GridSpec::cell_of(rb, p.row);
    const int gc = GridSpec::cell_of(cb, p.col);
    PatchRecord& rec = patches[static_cast<size_t>(gr) * grid.cols + gc];
    rec.points.points.push_back({p.row - rb[gr], p.col - cb[gc]});
  }
  return patches;
}

std::vector<DensityMap> split_density(const DensityMap& dm, const GridSpec& grid) {
  const auto rb = grid.row_bounds(dm.height);
  const auto cb = grid.col_bounds(dm.width);
  std::vector<DensityMap> cells;
  cells.reserve(static_cast<size_t>(grid.rows) * grid.cols);
  for (int gr = 0; gr < grid.rows; ++gr)
    for (int gc = 0; gc < grid.cols; ++gc)
      cells.push_back(crop(dm, rb[gr], cb[gc], rb[gr + 1] - rb[gr], cb[gc + 1] - cb[gc]));
  return cells;
}

DensityMap assemble_density(const std::map<std::pair<int, int>, DensityMap>& patches,
                            const GridSpec& grid, int frame_height, int frame_width,
                            int factor) {
  if (factor < 1) throw std::invalid_argument("assemble_density: factor must be >= 1");
  const auto rb = grid.row_bounds(frame_height);
  const auto cb = grid.col_bounds(frame_width);
  const auto scaled = [factor](int extent) { return (extent + factor - 1) / factor; };

  // Output extents are per-axis sums of the scaled cell extents.
  std::vector<int> out_r(static_cast<size_t>(grid.rows) + 1, 0);
  std::vector<int> out_c(static_cast<size_t>(grid.cols) + 1, 0);
  for (int i = 0; i < grid.rows; ++i) out_r[i + 1] = out_r[i] + scaled(rb[i + 1] - rb[i]);
  for (int j = 0; j < grid.cols; ++j) out_c[j + 1] = out_c[j] + scaled(cb[j + 1] - cb[j]);

  DensityMap out(out_r[grid.rows], out_c[grid.cols]);
  for (int gr = 0; gr < grid.rows; ++gr) {
    for (int gc = 0; gc < grid.cols; ++gc) {
      const auto it = patches.find({gr, gc});
      if (it == patches.end())
        throw std::invalid_argument("assemble_density: missing cell (" + std::to_string(gr) +
                                    "," + std::to_string(gc) + ")");
      const DensityMap& cell = it->second;
      const int eh = scaled(rb[gr + 1] - rb[gr]);
      const int ew = scaled(cb[gc + 1] - cb[gc]);
      if (cell.height != eh || cell.width != ew)
        throw std::invalid_argument("assemble_density: cell (" + std::to_string(gr) + "," +
                                    std::to_string(gc) + ") has dims " +
                                    std::to_string(cell.height) + "x" +
                                    std::to_string(cell.width) + ", expected " +
                                    std::to_string(eh) + "x" + std::to_string(ew));
      for (int r = 0; r < eh; ++r)
        for (int c = 0; c < ew; ++c) out.at(out_r[gr] + r, out_c[gc] + c) = cell.at(r, c);
    }
  }
  return out;
}

}  // namespace scnn
