#pragma once

#include <optional>
#include <string>

#include "scnn/geometry.hpp"
#include "scnn/image.hpp"

namespace scnn {

/// One annotated crowd scene: grayscale image in [0, 1], head annotations,
/// and an optional region-of-interest mask.
struct Scene {
  std::string id;
  Image image;
  PointSet annotations;
  std::optional<Mask> roi;

  /// Throws if annotations fall outside the image or the ROI dims mismatch.
  void validate() const;
};

}  // namespace scnn
