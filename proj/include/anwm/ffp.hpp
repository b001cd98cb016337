#pragma once

#include <optional>
#include <span>
#include <vector>

#include "anwm/frame.hpp"
#include "anwm/geometry.hpp"

namespace anwm {

/// A frame together with the pose it was observed from.
struct Observation {
  FrameRGBD frame;
  Pose4 pose;
};

/// Source frame warped into a target view. `valid` marks pixels that received
/// a splat; holes hold `fill` in every colour channel and zero depth. Depth is
/// the camera-frame z of the splatted point in the target view.
struct ProjectedFrame : FrameRGBD {
  static ProjectedFrame holes(int width, int height, float fill = 0.f);
  double hole_fraction() const;
};

struct Splat {
  int u, v;
  float depth;
};

/// Back-projects pixel (u, v) with planar depth, moves it by `t_rel` and
/// rounds the reprojection to the nearest target pixel. Empty when the point
/// lands behind the camera or outside the image.
std::optional<Splat> project_pixel(int u, int v, float depth, const RigidTransform& t_rel, const Intrinsics& k);

/// Forward-splats every valid source pixel. A per-pixel z-buffer keeps the
/// smallest projected depth; among equal depths the first splat in row-major
/// source order wins.
ProjectedFrame project_frame(const FrameRGBD& src, const RigidTransform& t_rel, const Intrinsics& k,
                             float fill = 0.f);

/// Per-pixel minimum projected depth over `frames` (ordered oldest to newest);
/// ties go to the newest frame.
ProjectedFrame fuse_projections(std::span<const ProjectedFrame> frames);

/// Warps the most recent `max_frames` context observations (all when zero)
/// into `target` and fuses them. Context is ordered oldest to newest.
ProjectedFrame future_frame_projection(std::span<const Observation> context, const Pose4& target,
                                       const Intrinsics& k, std::size_t max_frames = 0, float fill = 0.f);

}  // namespace anwm
