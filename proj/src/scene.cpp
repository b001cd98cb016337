#include "anwm/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "anwm/errors.hpp"
#include "anwm/rng.hpp"

namespace anwm {

namespace {

// Fixed directional shading per face orientation; makes box faces separable.
double face_shade(const Eigen::Vector3d& n) {
  if (n.z() > 0.5) return 1.0;
  if (n.x() > 0.5) return 0.92;
  if (n.x() < -0.5) return 0.78;
  if (n.y() > 0.5) return 0.86;
  return 0.72;
}

double gradient_t(const Texture& t, const Eigen::Vector3d& p) {
  return std::clamp(p.dot(t.direction) / t.span + 0.5, 0.0, 1.0);
}

}  // namespace

Eigen::Vector3d Texture::eval(const Eigen::Vector3d& p, const Eigen::Vector3d& normal) const {
  switch (kind) {
    case TextureKind::Solid:
      return color_a;
    case TextureKind::Gradient:
      return color_a + (color_b - color_a) * gradient_t(*this, p);
    case TextureKind::Checker: {
      double a, b;
      if (std::abs(normal.x()) > 0.5) {
        a = p.y(), b = p.z();
      } else if (std::abs(normal.y()) > 0.5) {
        a = p.x(), b = p.z();
      } else {
        a = p.x(), b = p.y();
      }
      const auto parity = (static_cast<long long>(std::floor(a / cell)) +
                           static_cast<long long>(std::floor(b / cell))) & 1LL;
      const Eigen::Vector3d base = parity ? color_b : color_a;
      const double g = gradient_t(*this, p) - 0.5;
      return base + gradient_mix * g * Eigen::Vector3d::Ones();
    }
  }
  return color_a;
}

bool Box::contains(const Eigen::Vector3d& p, double margin) const {
  return (p.array() > (min.array() - margin)).all() && (p.array() < (max.array() + margin)).all();
}

bool Scene::collides(const Eigen::Vector3d& p, double margin) const {
  if (p.z() < margin) return true;
  if (std::abs(p.x()) > config.extent || std::abs(p.y()) > config.extent) return true;
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(p, margin); });
}

void SceneConfig::validate() const {
  if (!(extent > 0) || !std::isfinite(extent))
    throw InvalidArgument("scene config: extent must be positive");
  if (!(ground_extent >= extent))
    throw InvalidArgument("scene config: ground_extent must cover extent");
  if (!(max_depth > 0)) throw InvalidArgument("scene config: max_depth must be positive");
  if (box_count_min < 0 || box_count_max < box_count_min)
    throw InvalidArgument("scene config: invalid box count range");
  if ((box_size_min.array() <= 0).any() ||
      (box_size_max.array() < box_size_min.array()).any())
    throw InvalidArgument("scene config: invalid box size range");
}

Scene build_scene(std::uint64_t seed, const SceneConfig& config) {
  config.validate();

  Scene scene;
  scene.seed = seed;
  scene.config = config;
  Rng rng(derive_seed(seed, "scene"));
  const auto count = rng.uniform_int(config.box_count_min, config.box_count_max);
  scene.boxes.reserve(static_cast<std::size_t>(count) + config.extra_boxes.size());
  for (std::int64_t i = 0; i < count; ++i) {
    Box b;
    Eigen::Vector3d size;
    for (int d = 0; d < 3; ++d) size[d] = rng.uniform(config.box_size_min[d], config.box_size_max[d]);
    const double cx = rng.uniform(-config.extent, config.extent);
    const double cy = rng.uniform(-config.extent, config.extent);
    b.min = {cx - 0.5 * size.x(), cy - 0.5 * size.y(), 0.0};
    b.max = {cx + 0.5 * size.x(), cy + 0.5 * size.y(), size.z()};

    Texture& t = b.texture;
    t.kind = TextureKind::Checker;
    const double grey = rng.uniform(0.35, 0.75);
    const Eigen::Vector3d tint(rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08));
    t.color_a = (Eigen::Vector3d::Constant(grey) + tint).cwiseMax(0.05).cwiseMin(0.95);
    const double contrast = rng.uniform(0.08, 0.16) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    t.color_b = (t.color_a + Eigen::Vector3d::Constant(contrast)).cwiseMax(0.0).cwiseMin(1.0);
    t.cell = rng.uniform(3.0, 6.0);
    const double ang = rng.uniform(0.0, 2.0 * kPi);
    t.direction = {std::cos(ang), std::sin(ang), rng.uniform(-0.5, 0.5)};
    t.span = rng.uniform(20.0, 60.0);
    t.gradient_mix = rng.uniform(0.2, 0.4);
    scene.boxes.push_back(b);
  }
  for (const Box& b : config.extra_boxes) {
    if (b.min.z() < 0 || (b.max.array() <= b.min.array()).any())
      throw InvalidArgument("build_scene: explicit box must be non-empty and above ground");
    scene.boxes.push_back(b);
  }
  return scene;
}

namespace {

bool slab(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& b, double& t_hit, int& axis,
          double& sign) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  double enter_sign = 0;
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) return false;
      continue;
    }
    const double inv = 1.0 / d[i];
    double ta = (b.min[i] - o[i]) * inv;
    double tb = (b.max[i] - o[i]) * inv;
    double s = -1.0;  // entering through the min face
    if (ta > tb) {
      std::swap(ta, tb);
      s = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      enter_axis = i;
      enter_sign = s;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  if (t0 <= 0.0 || enter_axis < 0) return false;  // camera inside or behind
  t_hit = t0;
  axis = enter_axis;
  sign = enter_sign;
  return true;
}

}  // namespace

std::optional<RayHit> cast_pixel(const Scene& scene, const Pose4& pose, const Intrinsics& k, double u,
                                 double v) {
  const Eigen::Vector3d o = pose.position();
  const Eigen::Vector3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Eigen::Vector3d d = camera_to_world(pose.yaw) * dir_cam;

  double best = scene.config.max_depth;
  bool hit = false;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  const Texture* tex = &scene.config.ground;

  if (d.z() < 0.0 && o.z() > 0.0) {
    const double t = -o.z() / d.z();
    const Eigen::Vector3d p = o + t * d;
    if (t < best && std::abs(p.x()) <= scene.config.ground_extent &&
        std::abs(p.y()) <= scene.config.ground_extent) {
      best = t;
      hit = true;
    }
  }
  for (const Box& b : scene.boxes) {
    double t;
    int axis;
    double sign;
    if (slab(o, d, b, t, axis, sign) && t < best) {
      best = t;
      hit = true;
      normal = Eigen::Vector3d::Zero();
      normal[axis] = sign;
      tex = &b.texture;
    }
  }
  if (!hit) return std::nullopt;
  RayHit h;
  h.depth = best;
  h.point = o + best * d;
  h.color = (tex->eval(h.point, normal) * face_shade(normal)).cwiseMax(0.0).cwiseMin(1.0);
  return h;
}

FrameRGBD render(const Scene& scene, const Pose4& pose, const Intrinsics& k) {
  k.validate();
  FrameRGBD f = FrameRGBD::blank(k.width, k.height);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const auto hit = cast_pixel(scene, pose, k, u, v);
      if (hit) {
        for (int c = 0; c < 3; ++c) f.rgb[c](v, u) = quantize8(static_cast<float>(hit->color[c]));
        f.depth(v, u) = static_cast<float>(hit->depth);
        f.valid(v, u) = true;
      } else {
        for (int c = 0; c < 3; ++c) f.rgb[c](v, u) = quantize8(static_cast<float>(scene.config.sky[c]));
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// JSON text form

namespace {

using nlohmann::json;

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d json_vec(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument(std::string("scene config: ") + key + " must be [a, b, c]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* kind_name(TextureKind k) {
  switch (k) {
    case TextureKind::Solid: return "solid";
    case TextureKind::Checker: return "checker";
    case TextureKind::Gradient: return "gradient";
  }
  return "checker";
}

json texture_json(const Texture& t) {
  return {{"kind", kind_name(t.kind)},        {"color_a", vec_json(t.color_a)},
          {"color_b", vec_json(t.color_b)},   {"cell", t.cell},
          {"direction", vec_json(t.direction)}, {"span", t.span},
          {"gradient_mix", t.gradient_mix}};
}

Texture json_texture(const json& j) {
  Texture t;
  for (const auto& [key, val] : j.items()) {
    if (key == "kind") {
      const auto s = val.get<std::string>();
      if (s == "solid") t.kind = TextureKind::Solid;
      else if (s == "checker") t.kind = TextureKind::Checker;
      else if (s == "gradient") t.kind = TextureKind::Gradient;
      else throw InvalidArgument("scene config: unknown texture kind " + s);
    } else if (key == "color_a") t.color_a = json_vec(val, "color_a");
    else if (key == "color_b") t.color_b = json_vec(val, "color_b");
    else if (key == "cell") t.cell = val.get<double>();
    else if (key == "direction") t.direction = json_vec(val, "direction");
    else if (key == "span") t.span = val.get<double>();
    else if (key == "gradient_mix") t.gradient_mix = val.get<double>();
    else throw InvalidArgument("scene config: unknown texture key " + key);
  }
  if (!(t.cell > 0) || !(t.span > 0)) throw InvalidArgument("scene config: texture cell/span must be positive");
  return t;
}

json box_json(const Box& b) {
  return {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}, {"texture", texture_json(b.texture)}};
}

}  // namespace

SceneConfig scene_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("scene config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("scene config: expected a JSON object");
  SceneConfig c;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "extent") c.extent = val.get<double>();
      else if (key == "ground_extent") c.ground_extent = val.get<double>();
      else if (key == "max_depth") c.max_depth = val.get<double>();
      else if (key == "box_count") {
        c.box_count_min = c.box_count_max = val.get<int>();
      } else if (key == "box_count_min") c.box_count_min = val.get<int>();
      else if (key == "box_count_max") c.box_count_max = val.get<int>();
      else if (key == "box_size_min") c.box_size_min = json_vec(val, "box_size_min");
      else if (key == "box_size_max") c.box_size_max = json_vec(val, "box_size_max");
      else if (key == "ground") c.ground = json_texture(val);
      else if (key == "sky") c.sky = json_vec(val, "sky");
      else if (key == "boxes") {
        for (const auto& bj : val) {
          Box b;
          b.min = json_vec(bj.at("min"), "min");
          b.max = json_vec(bj.at("max"), "max");
          if (bj.contains("texture")) b.texture = json_texture(bj.at("texture"));
          c.extra_boxes.push_back(b);
        }
      } else {
        throw InvalidArgument("scene config: unknown key " + key);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scene config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string scene_config_to_json(const SceneConfig& c) {
  json boxes = json::array();
  for (const Box& b : c.extra_boxes) boxes.push_back(box_json(b));
  json j = {{"extent", c.extent},
            {"ground_extent", c.ground_extent},
            {"max_depth", c.max_depth},
            {"box_count_min", c.box_count_min},
            {"box_count_max", c.box_count_max},
            {"box_size_min", vec_json(c.box_size_min)},
            {"box_size_max", vec_json(c.box_size_max)},
            {"ground", texture_json(c.ground)},
            {"sky", vec_json(c.sky)},
            {"boxes", boxes}};
  return j.dump(2);
}

std::string scene_to_json(const Scene& scene) {
  json boxes = json::array();
  for (const Box& b : scene.boxes) boxes.push_back(box_json(b));
  json j = {{"seed", scene.seed},
            {"config", json::parse(scene_config_to_json(scene.config))},
            {"boxes", boxes}};
  return j.dump(2);
}

}  // namespace anwm
