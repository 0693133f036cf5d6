#include "scnn/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace scnn {

void KernelConfig::validate() const {
  if (sigma_fixed <= 0.0) throw std::invalid_argument("KernelConfig: sigma_fixed must be > 0");
  if (k_neighbors < 1) throw std::invalid_argument("KernelConfig: k_neighbors must be >= 1");
  if (beta <= 0.0) throw std::invalid_argument("KernelConfig: beta must be > 0");
  if (sigma_floor <= 0.0) throw std::invalid_argument("KernelConfig: sigma_floor must be > 0");
  if (truncation_radius_sigmas < 2.0)
    throw std::invalid_argument("KernelConfig: truncation_radius_sigmas must be >= 2");
}

namespace {

// Adds one truncated Gaussian splat, renormalized over the in-frame window so
// the annotation contributes exactly unit mass. The kernel is separable, so
// the window weights are an outer product of per-axis vectors and the mass is
// the product of their sums.
void splat(DensityMap& dm, const Point& p, double sigma, double trunc_sigmas) {
  const double radius = trunc_sigmas * sigma;
  // floor/ceil of the window edges always bracket at least one in-frame cell.
  const int r0 = std::max(0, static_cast<int>(std::floor(p.row - radius)));
  const int r1 = std::min(dm.height - 1, static_cast<int>(std::ceil(p.row + radius)));
  const int c0 = std::max(0, static_cast<int>(std::floor(p.col - radius)));
  const int c1 = std::min(dm.width - 1, static_cast<int>(std::ceil(p.col + radius)));
  if (r1 < r0 || c1 < c0) throw std::logic_error("splat window empty; point outside frame?");

  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> wr(static_cast<size_t>(r1 - r0 + 1));
  std::vector<double> wc(static_cast<size_t>(c1 - c0 + 1));
  double sr = 0.0, sc = 0.0;
  for (int r = r0; r <= r1; ++r) {
    const double d = r - p.row;
    wr[r - r0] = std::exp(-d * d * inv2s2);
    sr += wr[r - r0];
  }
  for (int c = c0; c <= c1; ++c) {
    const double d = c - p.col;
    wc[c - c0] = std::exp(-d * d * inv2s2);
    sc += wc[c - c0];
  }
  const double inv_mass = 1.0 / (sr * sc);
  for (int r = r0; r <= r1; ++r) {
    const double row_w = wr[r - r0] * inv_mass;
    double* out = &dm.at(r, c0);
    for (int c = c0; c <= c1; ++c) out[c - c0] += row_w * wc[c - c0];
  }
}

}  // namespace

DensityMap fixed_density_map(const PointSet& points, const KernelConfig& cfg) {
  cfg.validate();
  if (cfg.mode != KernelMode::kFixed)
    throw std::invalid_argument("fixed_density_map: cfg.mode must be fixed");
  points.validate();
  DensityMap dm(points.frame_height, points.frame_width);
  for (const Point& p : points.points) splat(dm, p, cfg.sigma_fixed, cfg.truncation_radius_sigmas);
  return dm;
}

DensityMap adaptive_density_map(const PointSet& points, const KernelConfig& cfg) {
  cfg.validate();
  if (cfg.mode != KernelMode::kAdaptive)
    throw std::invalid_argument("adaptive_density_map: cfg.mode must be adaptive");
  points.validate();
  DensityMap dm(points.frame_height, points.frame_width);
  for (size_t i = 0; i < points.points.size(); ++i) {
    const auto mean_dist = knn_mean_distance(points, i, cfg.k_neighbors);
    const double sigma =
        mean_dist ? std::max(cfg.sigma_floor, cfg.beta * *mean_dist) : cfg.sigma_fallback;
    splat(dm, points.points[i], sigma, cfg.truncation_radius_sigmas);
  }
  return dm;
}

DensityMap make_density_map(const PointSet& points, const KernelConfig& cfg) {
  return cfg.mode == KernelMode::kFixed ? fixed_density_map(points, cfg)
                                        : adaptive_density_map(points, cfg);
}

}  // namespace scnn
