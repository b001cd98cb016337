#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anwm/dataset.hpp"
#include "anwm/errors.hpp"
#include "anwm/image_io.hpp"
#include "anwm/log.hpp"

namespace anwm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kRasterMagic[8] = {'A', 'N', 'W', 'M', 'D', 'P', 'T', '1'};
constexpr std::size_t kRasterHeader = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::string raster_header(int width, int height) {
  std::string h(kRasterMagic, 8);
  put_u32(h, static_cast<std::uint32_t>(width));
  put_u32(h, static_cast<std::uint32_t>(height));
  return h;
}

void write_bytes(const fs::path& path, const std::string& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_bytes(const fs::path& path, const std::string& field) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(field, "missing file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Validates the header and returns (width, height).
std::pair<int, int> parse_raster_header(const std::string& data, const std::string& field,
                                        std::size_t bytes_per_pixel) {
  if (data.size() < kRasterHeader) throw FormatError(field, "truncated header");
  if (std::memcmp(data.data(), kRasterMagic, 8) != 0) throw FormatError(field, "bad magic");
  const auto w = get_u32(data.data() + 8), h = get_u32(data.data() + 12);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw FormatError(field, "implausible dimensions");
  const std::size_t expect = kRasterHeader + std::size_t{w} * h * bytes_per_pixel;
  if (data.size() < expect) throw FormatError(field, "truncated raster");
  if (data.size() > expect) throw FormatError(field, "trailing bytes after raster");
  return {static_cast<int>(w), static_cast<int>(h)};
}

std::string frame_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.%s", i, ext);
  return buf;
}

std::string field_name(const char* dir, std::size_t i, const char* ext) {
  return std::string(dir) + "/" + frame_name(i, ext);
}

}  // namespace

void write_depth_raw(const fs::path& path, const Plane& depth) {
  std::string out = raster_header(static_cast<int>(depth.cols()), static_cast<int>(depth.rows()));
  out.reserve(kRasterHeader + depth.size() * 4);
  for (int r = 0; r < depth.rows(); ++r)
    for (int c = 0; c < depth.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(depth(r, c)));
  write_bytes(path, out);
}

Plane read_depth_raw(const fs::path& path) {
  const std::string field = path.parent_path().filename().string() + "/" + path.filename().string();
  const std::string data = read_bytes(path, field);
  const auto [w, h] = parse_raster_header(data, field, 4);
  Plane d(h, w);
  const char* p = data.data() + kRasterHeader;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c, p += 4) d(r, c) = std::bit_cast<float>(get_u32(p));
  return d;
}

void write_mask_raw(const fs::path& path, const Mask& mask) {
  std::string out = raster_header(static_cast<int>(mask.cols()), static_cast<int>(mask.rows()));
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) out.push_back(mask(r, c) ? 1 : 0);
  write_bytes(path, out);
}

Mask read_mask_raw(const fs::path& path) {
  const std::string field = path.parent_path().filename().string() + "/" + path.filename().string();
  const std::string data = read_bytes(path, field);
  const auto [w, h] = parse_raster_header(data, field, 1);
  Mask m(h, w);
  const char* p = data.data() + kRasterHeader;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c, ++p) {
      if (*p != 0 && *p != 1) throw FormatError(field, "mask byte is neither 0 nor 1");
      m(r, c) = *p == 1;
    }
  return m;
}

void write_clip(const Clip& clip, const fs::path& dir) {
  clip.validate();
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "valid");

  json poses = json::array(), actions = json::array();
  for (const auto& p : clip.poses) poses.push_back({p.x, p.y, p.z, p.yaw});
  for (const auto& a : clip.actions) actions.push_back({a.dx, a.dy, a.dz, a.dyaw});
  const auto& k = clip.intrinsics;
  json manifest = {
      {"format", "anwm-clip"},
      {"version", kClipFormatVersion},
      {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
      {"poses", poses},
      {"actions", actions},
      {"frame_count", clip.frames.size()},
      {"meta", {{"scene_seed", clip.meta.scene_seed}, {"view_offset", clip.meta.view_offset}, {"split", clip.meta.split}}},
  };
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    const FrameRGBD& f = clip.frames[i];
    write_png(dir / "rgb" / frame_name(i, "png"), rgb_image(f));
    write_depth_raw(dir / "depth" / frame_name(i, "raw"), f.depth);
    write_mask_raw(dir / "valid" / frame_name(i, "raw"), f.valid);
  }
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(1) << '\n';
  if (!os) throw std::runtime_error("write failed: " + (dir / "manifest.json").string());
}

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + key, "missing");
  return j.at(key);
}

template <typename T>
T number(const json& j, const std::string& field) {
  if (!j.is_number()) throw FormatError(field, "expected a number");
  return j.get<T>();
}

std::array<double, 4> quad(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) throw FormatError(field, "expected 4 numbers");
  return {number<double>(j[0], field), number<double>(j[1], field), number<double>(j[2], field),
          number<double>(j[3], field)};
}

void warn_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      log::warn("clip manifest: ignoring unknown key '" + where + key + "'");
  }
}

}  // namespace

Clip read_clip(const fs::path& dir) {
  json m;
  {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw FormatError("manifest.json", "missing file");
    try {
      m = json::parse(is);
    } catch (const json::parse_error& e) {
      throw FormatError("manifest.json", e.what());
    }
  }
  if (!m.is_object()) throw FormatError("manifest.json", "expected an object");
  const int version = number<int>(require(m, "version", ""), "version");
  if (version != kClipFormatVersion)
    throw VersionError("clip format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kClipFormatVersion) + ")");
  warn_unknown(m, {"format", "version", "intrinsics", "poses", "actions", "frame_count", "meta"}, "");

  Clip clip;
  const json& kj = require(m, "intrinsics", "");
  warn_unknown(kj, {"fx", "fy", "cx", "cy", "width", "height"}, "intrinsics.");
  clip.intrinsics.fx = number<double>(require(kj, "fx", "intrinsics."), "intrinsics.fx");
  clip.intrinsics.fy = number<double>(require(kj, "fy", "intrinsics."), "intrinsics.fy");
  clip.intrinsics.cx = number<double>(require(kj, "cx", "intrinsics."), "intrinsics.cx");
  clip.intrinsics.cy = number<double>(require(kj, "cy", "intrinsics."), "intrinsics.cy");
  clip.intrinsics.width = number<int>(require(kj, "width", "intrinsics."), "intrinsics.width");
  clip.intrinsics.height = number<int>(require(kj, "height", "intrinsics."), "intrinsics.height");
  try {
    clip.intrinsics.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError("intrinsics", e.what());
  }

  const json& pj = require(m, "poses", "");
  if (!pj.is_array() || pj.empty()) throw FormatError("poses", "expected a non-empty array");
  for (std::size_t i = 0; i < pj.size(); ++i) {
    const auto q = quad(pj[i], "poses[" + std::to_string(i) + "]");
    clip.poses.emplace_back(q[0], q[1], q[2], q[3]);
  }
  const json& aj = require(m, "actions", "");
  if (!aj.is_array()) throw FormatError("actions", "expected an array");
  for (std::size_t i = 0; i < aj.size(); ++i) {
    const auto q = quad(aj[i], "actions[" + std::to_string(i) + "]");
    clip.actions.push_back({q[0], q[1], q[2], q[3]});
  }
  const json& mj = require(m, "meta", "");
  warn_unknown(mj, {"scene_seed", "view_offset", "split"}, "meta.");
  clip.meta.scene_seed = number<std::uint64_t>(require(mj, "scene_seed", "meta."), "meta.scene_seed");
  clip.meta.view_offset = number<int>(require(mj, "view_offset", "meta."), "meta.view_offset");
  const json& sj = require(mj, "split", "meta.");
  if (!sj.is_string()) throw FormatError("meta.split", "expected a string");
  clip.meta.split = sj.get<std::string>();

  const auto frame_count = number<std::size_t>(require(m, "frame_count", ""), "frame_count");
  if (frame_count != 0 && frame_count != clip.poses.size())
    throw FormatError("frame_count", "does not match the number of poses");
  for (std::size_t i = 0; i < frame_count; ++i) {
    FrameRGBD f;
    f.depth = read_depth_raw(dir / "depth" / frame_name(i, "raw"));
    f.valid = read_mask_raw(dir / "valid" / frame_name(i, "raw"));
    if (f.depth.cols() != clip.intrinsics.width || f.depth.rows() != clip.intrinsics.height)
      throw FormatError(field_name("depth", i, "raw"), "dimensions do not match intrinsics");
    if (f.valid.cols() != clip.intrinsics.width || f.valid.rows() != clip.intrinsics.height)
      throw FormatError(field_name("valid", i, "raw"), "dimensions do not match intrinsics");
    for (auto& c : f.rgb) c = Plane::Zero(clip.intrinsics.height, clip.intrinsics.width);
    const Image8 img = read_png(dir / "rgb" / frame_name(i, "png"));
    try {
      set_rgb(f, img);
    } catch (const FormatError&) {
      throw FormatError(field_name("rgb", i, "png"), "image size does not match intrinsics");
    }
    clip.frames.push_back(std::move(f));
  }
  try {
    clip.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError("poses", e.what());
  }
  return clip;
}

std::vector<fs::path> list_clips(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  if (fs::exists(root / "manifest.json")) return {root};
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "manifest.json") out.push_back(e.path().parent_path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace anwm
