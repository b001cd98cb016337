#include "anwm/dataset.hpp"

#include <cmath>
#include <string>

#include "anwm/errors.hpp"

namespace anwm {

void Clip::validate(double tol) const {
  if (poses.size() != actions.size() + 1)
    throw InvalidArgument("clip: expected " + std::to_string(actions.size() + 1) + " poses, got " +
                          std::to_string(poses.size()));
  if (!frames.empty() && frames.size() != poses.size())
    throw InvalidArgument("clip: frame count does not match pose count");
  for (const auto& f : frames)
    if (f.width() != intrinsics.width || f.height() != intrinsics.height)
      throw InvalidArgument("clip: frame size does not match intrinsics");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Pose4 p = compose_pose(poses[i], actions[i]);
    const Pose4& q = poses[i + 1];
    const double err = std::max({std::abs(p.x - q.x), std::abs(p.y - q.y), std::abs(p.z - q.z),
                                 std::abs(normalize_angle(p.yaw - q.yaw))});
    if (!(err <= tol))
      throw InvalidArgument("clip: pose " + std::to_string(i + 1) + " inconsistent with action " +
                            std::to_string(i) + " (error " + std::to_string(err) + ")");
  }
}

std::vector<Action4> action_primitives(const StepLimits& l) {
  return {{l.horizontal, 0, 0, 0}, {-l.horizontal, 0, 0, 0}, {0, l.horizontal, 0, 0},
          {0, -l.horizontal, 0, 0}, {0, 0, l.vertical, 0},  {0, 0, -l.vertical, 0},
          {0, 0, 0, l.yaw},          {0, 0, 0, -l.yaw}};
}

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Forward: return "forward";
    case Primitive::Backward: return "backward";
    case Primitive::Left: return "left";
    case Primitive::Right: return "right";
    case Primitive::Up: return "up";
    case Primitive::Down: return "down";
    case Primitive::RotateLeft: return "rotate_left";
    case Primitive::RotateRight: return "rotate_right";
  }
  return "?";
}

namespace {

bool pose_ok(const Scene& scene, const Pose4& p, double clearance, double max_alt) {
  return p.z <= max_alt && !scene.collides(p.position(), clearance);
}

}  // namespace

Pose4 sample_free_pose(const Scene& scene, Rng& rng, double clearance, double z_min, double z_max) {
  const double e = scene.config.extent - clearance;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Pose4 p(rng.uniform(-e, e), rng.uniform(-e, e), rng.uniform(z_min, z_max), rng.uniform(-kPi, kPi));
    if (!scene.collides(p.position(), clearance)) return p;
  }
  throw GenerationStuck("sample_free_pose: no free pose found");
}

Clip generate_trajectory(const Scene& scene, const TrajectorySpec& spec) {
  if (spec.length < 0) throw InvalidArgument("generate_trajectory: negative length");
  if (spec.primitives.empty()) throw InvalidArgument("generate_trajectory: empty primitive set");
  if (!spec.start.finite() || !pose_ok(scene, spec.start, spec.clearance, spec.max_altitude))
    throw InvalidArgument("generate_trajectory: start pose in collision");
  spec.intrinsics.validate();

  Rng rng(derive_seed(spec.seed, "trajectory"));
  Clip clip;
  clip.intrinsics = spec.intrinsics;
  clip.meta.scene_seed = scene.seed;
  clip.poses.push_back(spec.start);
  const auto n_prim = static_cast<std::int64_t>(spec.primitives.size());
  std::int64_t last = -1;
  for (int step = 0; step < spec.length; ++step) {
    const Pose4& cur = clip.poses.back();
    bool placed = false;
    for (int attempt = 0; attempt <= 100 && !placed; ++attempt) {
      std::int64_t idx;
      if (attempt == 0 && last >= 0 && rng.uniform() < spec.persistence) {
        idx = last;
      } else {
        idx = rng.uniform_int(0, n_prim - 1);
      }
      const Action4& a = spec.primitives[static_cast<std::size_t>(idx)];
      const Pose4 next = compose_pose(cur, a);
      if (pose_ok(scene, next, spec.clearance, spec.max_altitude)) {
        clip.actions.push_back(a);
        clip.poses.push_back(next);
        last = idx;
        placed = true;
      }
    }
    if (!placed)
      throw GenerationStuck("generate_trajectory: no feasible primitive at step " + std::to_string(step));
  }
  clip.frames.reserve(clip.poses.size());
  for (const Pose4& p : clip.poses) clip.frames.push_back(render(scene, p, spec.intrinsics));
  return clip;
}

std::vector<Clip> enrich_views(const Clip& clip, const Scene& scene) {
  std::vector<Clip> out;
  out.reserve(4);
  out.push_back(clip);
  out.front().meta.view_offset = 0;
  for (int q = 1; q < 4; ++q) {
    Clip c;
    c.intrinsics = clip.intrinsics;
    c.meta = clip.meta;
    c.meta.view_offset = q;
    const double offset = q * 0.5 * kPi;
    for (const Pose4& p : clip.poses) c.poses.emplace_back(p.x, p.y, p.z, p.yaw + offset);
    for (const Action4& a : clip.actions) c.actions.push_back(rotate_action_view(a, q));
    for (const Pose4& p : c.poses) c.frames.push_back(render(scene, p, c.intrinsics));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Clip> partition_segments(const Clip& clip, int segment_len, int offset) {
  if (segment_len <= 0) throw InvalidArgument("partition_segments: segment_len must be positive");
  if (offset < 0) throw InvalidArgument("partition_segments: negative offset");
  std::vector<Clip> out;
  const auto n = static_cast<int>(clip.actions.size());
  for (int start = offset; start + segment_len <= n; start += segment_len) {
    Clip s;
    s.intrinsics = clip.intrinsics;
    s.meta = clip.meta;
    s.poses.assign(clip.poses.begin() + start, clip.poses.begin() + start + segment_len + 1);
    s.actions.assign(clip.actions.begin() + start, clip.actions.begin() + start + segment_len);
    if (!clip.frames.empty())
      s.frames.assign(clip.frames.begin() + start, clip.frames.begin() + start + segment_len + 1);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Clip> partition_segments(const Clip& clip, int segment_len, Rng& rng) {
  if (segment_len <= 0) throw InvalidArgument("partition_segments: segment_len must be positive");
  const auto n = static_cast<int>(clip.actions.size());
  if (n < segment_len) return {};
  const int offset = static_cast<int>(rng.uniform_int(0, n % segment_len));
  return partition_segments(clip, segment_len, offset);
}

}  // namespace anwm
