#include "scnn/density_map.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "raw_io.hpp"

namespace scnn {

double DensityMap::sum() const {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

double predicted_count(const DensityMap& dm, const Mask* roi) {
  if (!roi) return dm.sum();
  if (roi->height != dm.height || roi->width != dm.width)
    throw std::invalid_argument("predicted_count: mask dims do not match density map");
  double total = 0.0;
  for (size_t i = 0; i < dm.values.size(); ++i)
    if (roi->cells[i]) total += dm.values[i];
  return total;
}

DensityMap downsample_preserving_count(const DensityMap& dm, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (factor == 1) return dm;
  const int oh = (dm.height + factor - 1) / factor;
  const int ow = (dm.width + factor - 1) / factor;
  DensityMap out(oh, ow);
  for (int r = 0; r < dm.height; ++r)
    for (int c = 0; c < dm.width; ++c) out.at(r / factor, c / factor) += dm.at(r, c);
  return out;
}

DensityMap crop(const DensityMap& dm, int r0, int c0, int h, int w) {
  if (r0 < 0 || c0 < 0 || h < 0 || w < 0 || r0 + h > dm.height || c0 + w > dm.width)
    throw std::invalid_argument("crop window out of range");
  DensityMap out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = dm.at(r0 + r, c0 + c);
  return out;
}

void save_density_map(const std::string& stem, const DensityMap& dm) {
  {
    std::ofstream meta(stem + ".meta");
    if (!meta) throw std::runtime_error("cannot create " + stem + ".meta");
    meta << "height " << dm.height << "\n";
    meta << "width " << dm.width << "\n";
    meta << "dtype f32\n";
    meta << "byte_order little-endian\n";
    meta << "layout row-major\n";
  }
  std::ofstream raw(stem + ".raw", std::ios::binary);
  if (!raw) throw std::runtime_error("cannot create " + stem + ".raw");
  detail::write_f32_span(raw, dm.values.data(), dm.values.size());
}

DensityMap load_density_map(const std::string& stem) {
  std::ifstream meta(stem + ".meta");
  if (!meta) throw std::runtime_error("cannot open " + stem + ".meta");
  int height = -1, width = -1;
  std::string line;
  while (std::getline(meta, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "height") ls >> height;
    else if (key == "width") ls >> width;
    else if (key == "dtype") {
      std::string v;
      ls >> v;
      if (v != "f32") throw std::runtime_error(stem + ".meta: unsupported dtype " + v);
    } else if (key == "byte_order") {
      std::string v;
      ls >> v;
      if (v != "little-endian")
        throw std::runtime_error(stem + ".meta: unsupported byte order " + v);
    } else if (key == "layout") {
      std::string v;
      ls >> v;
      if (v != "row-major") throw std::runtime_error(stem + ".meta: unsupported layout " + v);
    }
  }
  if (height < 0 || width < 0) throw std::runtime_error(stem + ".meta: missing dimensions");

  DensityMap dm(height, width);
  std::ifstream raw(stem + ".raw", std::ios::binary);
  if (!raw) throw std::runtime_error("cannot open " + stem + ".raw");
  detail::read_f32_span(raw, dm.values.data(), dm.values.size());
  return dm;
}

}  // namespace scnn
