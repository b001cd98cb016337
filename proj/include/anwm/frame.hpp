#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>

namespace anwm {

using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Colour value representable exactly in an 8-bit PNG.
inline float quantize8(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
}

inline std::uint8_t to_byte(float v) {
  const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

inline float from_byte(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }

/// Egocentric RGB-D observation. Planes are indexed (row, col) = (v, u).
/// Depth is planar camera-frame z and only meaningful where `valid`.
struct FrameRGBD {
  std::array<Plane, 3> rgb;
  Plane depth;
  Mask valid;

  static FrameRGBD blank(int width, int height) {
    FrameRGBD f;
    for (auto& c : f.rgb) c = Plane::Zero(height, width);
    f.depth = Plane::Zero(height, width);
    f.valid = Mask::Constant(height, width, false);
    return f;
  }

  int width() const { return static_cast<int>(depth.cols()); }
  int height() const { return static_cast<int>(depth.rows()); }

  bool operator==(const FrameRGBD& o) const {
    if (width() != o.width() || height() != o.height()) return false;
    for (int c = 0; c < 3; ++c)
      if ((rgb[c] != o.rgb[c]).any()) return false;
    return (depth == o.depth).all() && (valid == o.valid).all();
  }
};

}  // namespace anwm
