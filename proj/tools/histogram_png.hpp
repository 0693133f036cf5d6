#pragma once

#include <string>

#include "scnn/evaluation.hpp"

namespace scnn::tools {

/// Renders a grouped-bar chart of the per-regressor inter-head-distance
/// histogram to an RGB PNG.
void render_histogram_png(const std::string& path, const Histogram& hist);

}  // namespace scnn::tools
