#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anwm/frame.hpp"
#include "anwm/geometry.hpp"

namespace anwm {

enum class TextureKind { Solid, Checker, Gradient };

/// Procedural surface colour. Evaluated on world coordinates, so every face of
/// a box shares one continuous pattern.
///  - Solid:    color_a everywhere.
///  - Checker:  cells of size `cell` along the two in-face axes alternate
///              between color_a and color_b, plus the gradient term below.
///  - Gradient: color_a + (color_b - color_a) * clamp(dot(p, direction) / span + 0.5, 0, 1).
/// Checker also adds `gradient_mix` of the gradient pattern, which breaks the
/// periodicity of the cells.
struct Texture {
  TextureKind kind = TextureKind::Checker;
  Eigen::Vector3d color_a{0.5, 0.5, 0.5};
  Eigen::Vector3d color_b{0.6, 0.6, 0.6};
  double cell = 3.0;
  Eigen::Vector3d direction{1.0, 0.0, 0.0};
  double span = 100.0;
  double gradient_mix = 0.0;

  Eigen::Vector3d eval(const Eigen::Vector3d& p, const Eigen::Vector3d& normal) const;
};

struct Box {
  Eigen::Vector3d min;  // min.z() >= 0
  Eigen::Vector3d max;
  Texture texture;

  bool contains(const Eigen::Vector3d& p, double margin = 0.0) const;
};

/// Generation parameters. Text form is a JSON object with the keys listed in
/// README.md (see scene_config_from_json).
struct SceneConfig {
  double extent = 120.0;         // boxes and agents live in [-extent, extent]^2
  double ground_extent = 400.0;  // the ground plane is a finite square
  double max_depth = 600.0;
  int box_count_min = 80;
  int box_count_max = 100;
  Eigen::Vector3d box_size_min{6.0, 6.0, 8.0};
  Eigen::Vector3d box_size_max{22.0, 22.0, 90.0};
  Texture ground{TextureKind::Checker, {0.30, 0.42, 0.25}, {0.38, 0.47, 0.30}, 6.0,
                 {0.6, 0.8, 0.0}, 300.0, 0.35};
  Eigen::Vector3d sky{0.62, 0.76, 0.94};
  // Explicit boxes appended after the random ones.
  std::vector<Box> extra_boxes;

  void validate() const;
};

struct Scene {
  std::uint64_t seed = 0;
  SceneConfig config;
  std::vector<Box> boxes;

  /// True if `p` is inside a box (inflated by margin), below `margin` or
  /// outside the horizontal extent.
  bool collides(const Eigen::Vector3d& p, double margin = 0.0) const;
};

struct RayHit {
  double depth;  // along the camera z axis
  Eigen::Vector3d point;
  Eigen::Vector3d color;
};

Scene build_scene(std::uint64_t seed, const SceneConfig& config);

/// Casts one ray through continuous pixel coordinates (u, v).
std::optional<RayHit> cast_pixel(const Scene& scene, const Pose4& pose, const Intrinsics& k,
                                 double u, double v);

/// Ray-cast RGB-D render. RGB is quantized to 8-bit levels so frames survive
/// PNG storage bit-exactly. Escaping rays are invalid with the sky colour.
FrameRGBD render(const Scene& scene, const Pose4& pose, const Intrinsics& k);

// JSON text form of SceneConfig (human-editable, unknown keys rejected).
SceneConfig scene_config_from_json(const std::string& text);
std::string scene_config_to_json(const SceneConfig& config);
std::string scene_to_json(const Scene& scene);

}  // namespace anwm
