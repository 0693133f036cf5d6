#include "scnn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scnn {

void PointSet::validate() const {
  for (const Point& p : points) {
    if (!(p.row >= 0.0 && p.row < frame_height && p.col >= 0.0 && p.col < frame_width))
      throw std::invalid_argument("annotation outside frame bounds");
  }
}

std::optional<double> knn_mean_distance(const PointSet& points, size_t index, int k) {
  if (points.points.empty()) throw std::invalid_argument("knn_mean_distance: empty point set");
  if (index >= points.points.size())
    throw std::out_of_range("knn_mean_distance: index out of range");
  if (k < 1) throw std::invalid_argument("knn_mean_distance: k must be >= 1");

  const Point& p = points.points[index];
  std::vector<double> dists;
  dists.reserve(points.points.size() - 1);
  for (size_t j = 0; j < points.points.size(); ++j) {
    if (j == index) continue;
    const double dr = points.points[j].row - p.row;
    const double dc = points.points[j].col - p.col;
    dists.push_back(std::sqrt(dr * dr + dc * dc));
  }
  if (dists.empty()) return std::nullopt;

  const size_t take = std::min<size_t>(static_cast<size_t>(k), dists.size());
  std::partial_sort(dists.begin(), dists.begin() + take, dists.end());
  double total = 0.0;
  for (size_t j = 0; j < take; ++j) total += dists[j];
  return total / static_cast<double>(take);
}

double patch_mean_interhead_distance(const PointSet& points, int k) {
  double total = 0.0;
  size_t defined = 0;
  for (size_t i = 0; i < points.points.size(); ++i) {
    if (auto d = knn_mean_distance(points, i, k)) {
      total += *d;
      ++defined;
    }
  }
  if (defined == 0) return 0.0;  // empty-mean convention: zero bucket
  return total / static_cast<double>(defined);
}

}  // namespace scnn
