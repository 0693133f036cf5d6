#pragma once

#include "scnn/density_map.hpp"
#include "scnn/geometry.hpp"

namespace scnn {

enum class KernelMode { kFixed, kAdaptive };

/// Gaussian kernel parameters for density-map ground truth.
///
/// In adaptive mode the per-annotation spread is
///   sigma_i = max(sigma_floor, beta * mean distance to the k nearest heads),
/// falling back to sigma_fallback when an annotation has no neighbor.
/// Kernels are truncated at truncation_radius_sigmas * sigma and renormalized
/// so each annotation contributes exactly unit in-frame mass.
struct KernelConfig {
  KernelMode mode = KernelMode::kAdaptive;
  double sigma_fixed = 4.0;           // fixed mode spread, px
  int k_neighbors = 3;                // adaptive mode kNN count
  double beta = 0.3;                  // adaptive spread = beta * mean kNN distance
  double sigma_floor = 1.0;           // px
  double sigma_fallback = 15.0;       // px, used when kNN distance is undefined
  double truncation_radius_sigmas = 4.0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Density map from fixed-spread Gaussians, one per annotation.
/// sum(result) == points.count() up to floating-point rounding.
DensityMap fixed_density_map(const PointSet& points, const KernelConfig& cfg);

/// Density map from geometry-adaptive Gaussians.
DensityMap adaptive_density_map(const PointSet& points, const KernelConfig& cfg);

/// Dispatch on cfg.mode.
DensityMap make_density_map(const PointSet& points, const KernelConfig& cfg);

}  // namespace scnn
