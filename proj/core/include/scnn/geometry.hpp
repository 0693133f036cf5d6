#pragma once

#include <optional>
#include <vector>

namespace scnn {

/// A head annotation at sub-pixel precision, (row, col) in pixels.
struct Point {
  double row = 0.0;
  double col = 0.0;
};

/// Point head annotations inside a frame. Coordinates live in the half-open
/// box [0, frame_height) x [0, frame_width).
struct PointSet {
  std::vector<Point> points;
  int frame_height = 0;
  int frame_width = 0;

  size_t count() const { return points.size(); }
  /// Throws std::invalid_argument if any point is outside the frame box.
  void validate() const;
};

/// Mean Euclidean distance from points[index] to its k nearest other points.
/// Fewer than k neighbors: averages over all that exist. No neighbors at all:
/// nullopt. Throws on empty set or index out of range.
std::optional<double> knn_mean_distance(const PointSet& points, size_t index, int k);

/// Mean of knn_mean_distance over all annotations, skipping undefined entries.
/// Empty patches and patches with no defined neighbor distance yield 0.
double patch_mean_interhead_distance(const PointSet& points, int k = 10);

}  // namespace scnn
