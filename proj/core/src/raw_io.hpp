#pragma once

// Little-endian f32 raw payload helpers shared by density-map and checkpoint
// serialization. Byte order is explicit so files are portable.

#include <cstdint>
#include <cstring>
#include <ostream>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scnn::detail {

inline void put_f32_le(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  const unsigned char b[4] = {
      static_cast<unsigned char>(bits & 0xff),
      static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline float get_f32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("raw payload truncated");
  const uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

template <typename T>
void write_f32_span(std::ostream& os, const T* data, size_t n) {
  for (size_t i = 0; i < n; ++i) put_f32_le(os, static_cast<float>(data[i]));
}

template <typename T>
void read_f32_span(std::istream& is, T* data, size_t n) {
  for (size_t i = 0; i < n; ++i) data[i] = static_cast<T>(get_f32_le(is));
}

}  // namespace scnn::detail
