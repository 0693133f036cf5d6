#include "scnn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace scnn {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

// Reads any grayscale-convertible PNG into one byte per pixel.
void read_gray8(const std::string& path, int& h, int& w, std::vector<uint8_t>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open PNG: " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw std::runtime_error("not a PNG file: " + path);

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw std::runtime_error("png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("PNG decode error: " + path);

  png_init_io(r.png, fp.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  const png_uint_32 width = png_get_image_width(r.png, r.info);
  const png_uint_32 height = png_get_image_height(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (depth == 16) png_set_strip_16(r.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
  png_read_update_info(r.png, r.info);

  h = static_cast<int>(height);
  w = static_cast<int>(width);
  bytes.assign(static_cast<size_t>(h) * w, 0);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = bytes.data() + static_cast<size_t>(y) * w;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
}

void write_gray(const std::string& path, int h, int w, const std::vector<uint8_t>& bytes,
                int bit_depth) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot create PNG: " + path);

  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!wr.png) throw std::runtime_error("png_create_write_struct failed");
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(wr.png))) throw std::runtime_error("PNG encode error: " + path);

  png_init_io(wr.png, fp.get());
  png_set_IHDR(wr.png, wr.info, w, h, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  if (bit_depth < 8) png_set_packing(wr.png);  // accept one byte per pixel, pack on write

  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * w);
  png_write_image(wr.png, rows.data());
  png_write_end(wr.png, nullptr);
}

}  // namespace

size_t Mask::count_true() const {
  size_t n = 0;
  for (uint8_t v : cells) n += (v != 0);
  return n;
}

Image crop(const Image& img, int r0, int c0, int h, int w) {
  if (r0 < 0 || c0 < 0 || h < 0 || w < 0 || r0 + h > img.height || c0 + w > img.width)
    throw std::invalid_argument("crop window out of range");
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
  return out;
}

Mask crop(const Mask& mask, int r0, int c0, int h, int w) {
  if (r0 < 0 || c0 < 0 || h < 0 || w < 0 || r0 + h > mask.height || c0 + w > mask.width)
    throw std::invalid_argument("crop window out of range");
  Mask out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = mask.at(r0 + r, c0 + c);
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize target must be positive");
  if (img.height < 1 || img.width < 1) throw std::invalid_argument("resize source is empty");
  Image out(out_h, out_w);
  const double sr = static_cast<double>(img.height) / out_h;
  const double sc = static_cast<double>(img.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    double src_r = (r + 0.5) * sr - 0.5;
    src_r = std::clamp(src_r, 0.0, static_cast<double>(img.height - 1));
    const int r0 = static_cast<int>(src_r);
    const int r1 = std::min(r0 + 1, img.height - 1);
    const double fr = src_r - r0;
    for (int c = 0; c < out_w; ++c) {
      double src_c = (c + 0.5) * sc - 0.5;
      src_c = std::clamp(src_c, 0.0, static_cast<double>(img.width - 1));
      const int c0 = static_cast<int>(src_c);
      const int c1 = std::min(c0 + 1, img.width - 1);
      const double fc = src_c - c0;
      const double top = img.at(r0, c0) * (1.0 - fc) + img.at(r0, c1) * fc;
      const double bot = img.at(r1, c0) * (1.0 - fc) + img.at(r1, c1) * fc;
      out.at(r, c) = static_cast<float>(top * (1.0 - fr) + bot * fr);
    }
  }
  return out;
}

Mask downsample_nearest(const Mask& mask, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  const int oh = (mask.height + factor - 1) / factor;
  const int ow = (mask.width + factor - 1) / factor;
  Mask out(oh, ow, 0);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) out.at(r, c) = mask.at(r * factor, c * factor);
  return out;
}

Image read_png_gray(const std::string& path) {
  int h = 0, w = 0;
  std::vector<uint8_t> bytes;
  read_gray8(path, h, w, bytes);
  Image img(h, w);
  for (size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0f;
  return img;
}

void write_png_gray(const std::string& path, const Image& img) {
  std::vector<uint8_t> bytes(img.size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    bytes[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  write_gray(path, img.height, img.width, bytes, 8);
}

Mask read_png_mask(const std::string& path) {
  int h = 0, w = 0;
  std::vector<uint8_t> bytes;
  read_gray8(path, h, w, bytes);
  Mask mask(h, w);
  for (size_t i = 0; i < bytes.size(); ++i) mask.cells[i] = bytes[i] >= 128 ? 1 : 0;
  return mask;
}

void write_png_mask(const std::string& path, const Mask& mask) {
  std::vector<uint8_t> bytes(mask.cells.size());
  for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.cells[i] ? 1 : 0;
  write_gray(path, mask.height, mask.width, bytes, 1);
}

RgbImage::RgbImage(int h, int w, uint8_t r, uint8_t g, uint8_t b)
    : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3) {
  for (size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

void RgbImage::set(int r, int c, uint8_t cr, uint8_t cg, uint8_t cb) {
  if (r < 0 || r >= height || c < 0 || c >= width) return;
  const size_t i = (static_cast<size_t>(r) * width + c) * 3;
  pixels[i] = cr;
  pixels[i + 1] = cg;
  pixels[i + 2] = cb;
}

void write_png_rgb(const std::string& path, const RgbImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot create PNG: " + path);

  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!wr.png) throw std::runtime_error("png_create_write_struct failed");
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(wr.png))) throw std::runtime_error("PNG encode error: " + path);

  png_init_io(wr.png, fp.get());
  png_set_IHDR(wr.png, wr.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] =
        const_cast<png_bytep>(img.pixels.data() + static_cast<size_t>(y) * img.width * 3);
  png_write_image(wr.png, rows.data());
  png_write_end(wr.png, nullptr);
}

}  // namespace scnn
