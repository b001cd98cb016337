#include "anwm/wm/codec.hpp"

#include <algorithm>
#include <string>

#include "anwm/errors.hpp"

namespace anwm::wm {

double LatentCodec::latent_min() const {
  double lo = 0;
  for (int c = 0; c < 3; ++c) lo = std::min(lo, (0.0 - offset[c]) * scale[c]);
  return lo;
}

double LatentCodec::latent_max() const {
  double hi = 0;
  for (int c = 0; c < 3; ++c) hi = std::max(hi, (1.0 - offset[c]) * scale[c]);
  return hi;
}

LatentGrid<double> LatentCodec::encode(const FrameRGBD& frame) const {
  if (factor <= 0) throw InvalidArgument("codec: factor must be positive");
  if (frame.width() % factor != 0 || frame.height() % factor != 0)
    throw InvalidArgument("codec: frame " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                          " is not divisible by factor " + std::to_string(factor));
  const int h = frame.height() / factor, w = frame.width() / factor;
  LatentGrid<double> l(latent_channels(), h, w);
  for (int ch = 0; ch < 3; ++ch)
    for (int dy = 0; dy < factor; ++dy)
      for (int dx = 0; dx < factor; ++dx) {
        const int lc = (ch * factor + dy) * factor + dx;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            l.at(lc, i, j) = (static_cast<double>(frame.rgb[ch](i * factor + dy, j * factor + dx)) - offset[ch]) * scale[ch];
      }
  return l;
}

FrameRGBD LatentCodec::decode(const LatentGrid<double>& l) const {
  if (l.channels != latent_channels())
    throw InvalidArgument("codec: latent has " + std::to_string(l.channels) + " channels, expected " +
                          std::to_string(latent_channels()));
  FrameRGBD f = FrameRGBD::blank(l.width * factor, l.height * factor);
  for (int ch = 0; ch < 3; ++ch)
    for (int dy = 0; dy < factor; ++dy)
      for (int dx = 0; dx < factor; ++dx) {
        const int lc = (ch * factor + dy) * factor + dx;
        for (int i = 0; i < l.height; ++i)
          for (int j = 0; j < l.width; ++j)
            f.rgb[ch](i * factor + dy, j * factor + dx) = static_cast<float>(l.at(lc, i, j) / scale[ch] + offset[ch]);
      }
  return f;
}

}  // namespace anwm::wm
