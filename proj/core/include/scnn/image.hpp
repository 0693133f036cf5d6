#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scnn {

/// Grayscale raster with values in [0, 1], row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w, fill) {}

  float& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  float at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return pixels.size(); }
};

/// Boolean mask with the same layout as Image. Used for regions of interest.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> cells;  // 0 or 1

  Mask() = default;
  Mask(int h, int w, uint8_t fill = 1)
      : height(h), width(w), cells(static_cast<size_t>(h) * w, fill) {}

  uint8_t& at(int r, int c) { return cells[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return cells[static_cast<size_t>(r) * width + c]; }
  size_t count_true() const;
};

/// Crop the half-open window [r0, r0+h) x [c0, c0+w). Throws on out-of-range windows.
Image crop(const Image& img, int r0, int c0, int h, int w);
Mask crop(const Mask& mask, int r0, int c0, int h, int w);

/// Bilinear resample to (out_h, out_w). Sample positions follow the
/// half-pixel-center convention; border samples clamp.
Image resize_bilinear(const Image& img, int out_h, int out_w);

/// Nearest-neighbor downsample of a mask by an integer factor. A target cell is
/// true iff the top-left source cell of its block is true.
Mask downsample_nearest(const Mask& mask, int factor);

/// 8-bit grayscale PNG I/O. Loading converts to [0, 1]; writing rounds to the
/// nearest of 256 levels. Bit-depth-1 PNGs are used for masks.
Image read_png_gray(const std::string& path);
void write_png_gray(const std::string& path, const Image& img);
Mask read_png_mask(const std::string& path);
void write_png_mask(const std::string& path, const Mask& mask);

/// RGB byte raster used only by plot rendering.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // 3 bytes per pixel, row-major

  RgbImage() = default;
  RgbImage(int h, int w, uint8_t r = 255, uint8_t g = 255, uint8_t b = 255);
  void set(int r, int c, uint8_t cr, uint8_t cg, uint8_t cb);
};
void write_png_rgb(const std::string& path, const RgbImage& img);

}  // namespace scnn
