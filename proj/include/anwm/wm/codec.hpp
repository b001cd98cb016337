#pragma once

#include <array>

#include "anwm/frame.hpp"
#include "anwm/wm/latent.hpp"

namespace anwm::wm {

/// Exact invertible stand-in for a learned VAE: factor x factor space-to-depth
/// followed by a fixed per-channel affine map (v - offset) * scale.
///
/// Latent channel (ch * factor + dy) * factor + dx of cell (i, j) holds colour
/// channel ch of pixel (i * factor + dy, j * factor + dx). With offset 0.5 and
/// scale 4 (a power of two) colours in [0, 1] map to [-2, 2], and the round
/// trip through double is exact for every float colour >= 2^-31 (and for 0),
/// which covers all 8-bit colour levels.
struct LatentCodec {
  int factor = 4;
  std::array<double, 3> offset{0.5, 0.5, 0.5};
  std::array<double, 3> scale{4.0, 4.0, 4.0};

  int latent_channels() const { return 3 * factor * factor; }
  double latent_min() const;
  double latent_max() const;

  LatentGrid<double> encode(const FrameRGBD& frame) const;
  /// Colour planes only; depth is zero and every pixel invalid.
  FrameRGBD decode(const LatentGrid<double>& latent) const;
};

}  // namespace anwm::wm
