#include "anwm/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

#include "anwm/errors.hpp"

namespace anwm {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  const int color_type = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int r = 0; r < img.height; ++r)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + r * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError(path.filename().string(), "missing file");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw FormatError(path.filename().string(), "not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: out of memory");
  }
  Image8 img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.filename().string(), "corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto bit_depth = png_get_bit_depth(png, info);
  const auto color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = 3;
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(img.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.filename().string(), "unsupported PNG layout");
  }
  img.pixels.resize(stride * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = img.pixels.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image8 rgb_image(const FrameRGBD& f) {
  Image8 img{f.width(), f.height(), 3, {}};
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  std::size_t i = 0;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < 3; ++c) img.pixels[i++] = to_byte(f.rgb[c](v, u));
  return img;
}

Image8 mask_image(const Mask& m) {
  Image8 img{static_cast<int>(m.cols()), static_cast<int>(m.rows()), 1, {}};
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::size_t i = 0;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) img.pixels[i++] = m(v, u) ? 255 : 0;
  return img;
}

void set_rgb(FrameRGBD& f, const Image8& img) {
  if (img.width != f.width() || img.height != f.height() || img.channels != 3)
    throw FormatError("rgb", "image size does not match the frame");
  std::size_t i = 0;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < 3; ++c) f.rgb[c](v, u) = from_byte(img.pixels[i++]);
}

Image8 contact_sheet(const std::vector<Image8>& tiles, int columns) {
  if (tiles.empty() || columns <= 0) return {};
  const int tw = tiles.front().width, th = tiles.front().height;
  const int rows = (static_cast<int>(tiles.size()) + columns - 1) / columns;
  Image8 sheet{tw * columns, th * rows, 3, {}};
  sheet.pixels.assign(static_cast<std::size_t>(sheet.width) * sheet.height * 3, 0);
  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const Image8& tile = tiles[t];
    if (tile.width != tw || tile.height != th)
      throw InvalidArgument("contact_sheet: tiles must share dimensions");
    const int ox = static_cast<int>(t % columns) * tw, oy = static_cast<int>(t / columns) * th;
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x)
        for (int c = 0; c < 3; ++c) {
          const std::uint8_t val = tile.channels == 1 ? tile.pixels[y * tw + x] : tile.pixels[(y * tw + x) * 3 + c];
          sheet.pixels[((oy + y) * sheet.width + ox + x) * 3 + c] = val;
        }
  }
  return sheet;
}

}  // namespace anwm
