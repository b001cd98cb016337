#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anwm/frame.hpp"
#include "anwm/geometry.hpp"
#include "anwm/rng.hpp"
#include "anwm/scene.hpp"

namespace anwm {

struct ClipMeta {
  std::uint64_t scene_seed = 0;
  int view_offset = 0;  // quarter turns
  std::string split = "train";

  bool operator==(const ClipMeta&) const = default;
};

/// Aligned trajectory segment: frames[i] is observed at poses[i] and
/// actions[i] moves poses[i] to poses[i + 1].
struct Clip {
  std::vector<Pose4> poses;
  std::vector<Action4> actions;
  std::vector<FrameRGBD> frames;
  Intrinsics intrinsics;
  ClipMeta meta;

  std::size_t num_actions() const { return actions.size(); }
  /// Throws InvalidArgument when lengths disagree or a pose does not follow
  /// from its predecessor within `tol`.
  void validate(double tol = 1e-6) const;
};

enum class Primitive { Forward, Backward, Left, Right, Up, Down, RotateLeft, RotateRight };
inline constexpr int kNumPrimitives = 8;

/// The eight motion primitives at the per-step limits, indexed by Primitive.
std::vector<Action4> action_primitives(const StepLimits& limits = {});
const char* primitive_name(Primitive p);

struct TrajectorySpec {
  Pose4 start{0, 0, 20, 0};
  std::vector<Action4> primitives = action_primitives();
  std::uint64_t seed = 0;
  int length = 48;
  Intrinsics intrinsics;
  double clearance = 2.0;  // minimum distance to boxes and ground
  double max_altitude = 60.0;
  double persistence = 0.6;  // probability of repeating the previous primitive
};

/// Random walk over the primitive set with collision rejection, rendering a
/// frame at every pose.
Clip generate_trajectory(const Scene& scene, const TrajectorySpec& spec);

/// Finds a collision-free start pose by rejection sampling.
Pose4 sample_free_pose(const Scene& scene, Rng& rng, double clearance, double z_min, double z_max);

/// Front/left/rear/right re-recordings of one flight (index = quarter turns).
std::vector<Clip> enrich_views(const Clip& clip, const Scene& scene);

/// Non-overlapping segments of `segment_len` actions starting at `offset`.
std::vector<Clip> partition_segments(const Clip& clip, int segment_len, int offset);
/// As above with the offset drawn uniformly from [0, num_actions % segment_len].
std::vector<Clip> partition_segments(const Clip& clip, int segment_len, Rng& rng);

// On-disk clip directory: manifest.json, rgb/NNNN.png, depth/NNNN.raw, valid/NNNN.raw.
inline constexpr int kClipFormatVersion = 1;
void write_clip(const Clip& clip, const std::filesystem::path& dir);
Clip read_clip(const std::filesystem::path& dir);

/// Clip directories below `root` (those holding a manifest.json), sorted by name.
std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root);

// Raster files shared with FFP dumps.
void write_depth_raw(const std::filesystem::path& path, const Plane& depth);
Plane read_depth_raw(const std::filesystem::path& path);
void write_mask_raw(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_raw(const std::filesystem::path& path);

}  // namespace anwm
