#include "histogram_png.hpp"

#include <algorithm>

#include "scnn/image.hpp"

namespace scnn::tools {

namespace {
struct Color {
  uint8_t r, g, b;
};
constexpr Color kSeries[] = {{214, 39, 40}, {44, 160, 44}, {31, 119, 180},
                             {148, 103, 189}, {140, 86, 75}};
}  // namespace

void render_histogram_png(const std::string& path, const Histogram& hist) {
  constexpr int kWidth = 720, kHeight = 420;
  constexpr int kMarginLeft = 40, kMarginBottom = 30, kMarginTop = 15, kMarginRight = 15;
  RgbImage img(kHeight, kWidth);

  size_t max_count = 1;
  for (const auto& series : hist.counts)
    for (size_t v : series) max_count = std::max(max_count, v);

  const int plot_w = kWidth - kMarginLeft - kMarginRight;
  const int plot_h = kHeight - kMarginTop - kMarginBottom;
  const int bins = static_cast<int>(hist.edges.size()) - 1;
  const int num_series = static_cast<int>(hist.counts.size());
  const double group_w = static_cast<double>(plot_w) / std::max(1, bins);
  const double bar_w = group_w / (num_series + 1);

  for (int bin = 0; bin < bins; ++bin) {
    for (int s = 0; s < num_series; ++s) {
      const size_t count = hist.counts[static_cast<size_t>(s)][static_cast<size_t>(bin)];
      const int h = static_cast<int>(static_cast<double>(count) / max_count * (plot_h - 5));
      const int x0 = kMarginLeft + static_cast<int>(bin * group_w + s * bar_w);
      const int x1 = kMarginLeft + static_cast<int>(bin * group_w + (s + 1) * bar_w) - 1;
      const Color c = kSeries[s % 5];
      for (int y = 0; y < h; ++y)
        for (int x = x0; x <= x1; ++x)
          img.set(kHeight - kMarginBottom - 1 - y, x, c.r, c.g, c.b);
    }
  }
  // Axes.
  for (int x = kMarginLeft; x < kWidth - kMarginRight; ++x)
    img.set(kHeight - kMarginBottom, x, 0, 0, 0);
  for (int y = kMarginTop; y <= kHeight - kMarginBottom; ++y)
    img.set(y, kMarginLeft - 1, 0, 0, 0);

  write_png_rgb(path, img);
}

}  // namespace scnn::tools
