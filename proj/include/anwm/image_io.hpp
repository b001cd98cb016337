#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "anwm/frame.hpp"

namespace anwm {

struct Image8 {
  int width = 0, height = 0, channels = 3;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

void write_png(const std::filesystem::path& path, const Image8& img);
/// Reads an 8-bit grey/RGB/RGBA PNG as RGB. Throws FormatError on failure.
Image8 read_png(const std::filesystem::path& path);

Image8 rgb_image(const FrameRGBD& f);
Image8 mask_image(const Mask& m);
/// Copies `img` RGB into the colour planes of `f` (dimensions must match).
void set_rgb(FrameRGBD& f, const Image8& img);

/// Tiles equally sized images into rows of `columns` tiles.
Image8 contact_sheet(const std::vector<Image8>& tiles, int columns);

}  // namespace anwm
