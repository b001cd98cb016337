#include "anwm/ffp.hpp"

#include <cmath>

#include "anwm/errors.hpp"

namespace anwm {

ProjectedFrame ProjectedFrame::holes(int width, int height, float fill) {
  ProjectedFrame p;
  for (auto& c : p.rgb) c = Plane::Constant(height, width, fill);
  p.depth = Plane::Zero(height, width);
  p.valid = Mask::Constant(height, width, false);
  return p;
}

double ProjectedFrame::hole_fraction() const {
  if (valid.size() == 0) return 0.0;
  return 1.0 - static_cast<double>(valid.count()) / static_cast<double>(valid.size());
}

std::optional<Splat> project_pixel(int u, int v, float depth, const RigidTransform& t_rel, const Intrinsics& k) {
  const double d = depth;
  const Eigen::Vector3d p(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
  const Eigen::Vector3d q = t_rel.apply(p);
  if (!(q.z() > 0.0)) return std::nullopt;
  const double tu = k.fx * q.x() / q.z() + k.cx;
  const double tv = k.fy * q.y() / q.z() + k.cy;
  const double ru = std::floor(tu + 0.5), rv = std::floor(tv + 0.5);
  if (!(ru >= 0 && ru < k.width && rv >= 0 && rv < k.height)) return std::nullopt;
  return Splat{static_cast<int>(ru), static_cast<int>(rv), static_cast<float>(q.z())};
}

ProjectedFrame project_frame(const FrameRGBD& src, const RigidTransform& t_rel, const Intrinsics& k, float fill) {
  k.validate();
  if (src.width() != k.width || src.height() != k.height)
    throw InvalidArgument("project_frame: frame is " + std::to_string(src.width()) + "x" +
                          std::to_string(src.height()) + " but intrinsics are " + std::to_string(k.width) + "x" +
                          std::to_string(k.height));
  if (!t_rel.is_rigid(1e-6)) throw InvalidArgument("project_frame: transform is not rigid");

  ProjectedFrame out = ProjectedFrame::holes(k.width, k.height, fill);
  for (int v = 0; v < src.height(); ++v) {
    for (int u = 0; u < src.width(); ++u) {
      if (!src.valid(v, u)) continue;
      const auto s = project_pixel(u, v, src.depth(v, u), t_rel, k);
      if (!s) continue;
      if (out.valid(s->v, s->u) && !(s->depth < out.depth(s->v, s->u))) continue;
      out.valid(s->v, s->u) = true;
      out.depth(s->v, s->u) = s->depth;
      for (int c = 0; c < 3; ++c) out.rgb[c](s->v, s->u) = src.rgb[c](v, u);
    }
  }
  return out;
}

ProjectedFrame fuse_projections(std::span<const ProjectedFrame> frames) {
  if (frames.empty()) throw InvalidArgument("fuse_projections: no frames");
  const int w = frames.front().width(), h = frames.front().height();
  for (const auto& f : frames)
    if (f.width() != w || f.height() != h) throw InvalidArgument("fuse_projections: frame sizes differ");
  if (frames.size() == 1) return frames.front();

  ProjectedFrame out = frames.front();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const ProjectedFrame& f = frames[i];
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (!f.valid(v, u)) continue;
        if (out.valid(v, u) && f.depth(v, u) > out.depth(v, u)) continue;
        out.valid(v, u) = true;
        out.depth(v, u) = f.depth(v, u);
        for (int c = 0; c < 3; ++c) out.rgb[c](v, u) = f.rgb[c](v, u);
      }
    }
  }
  return out;
}

ProjectedFrame future_frame_projection(std::span<const Observation> context, const Pose4& target,
                                       const Intrinsics& k, std::size_t max_frames, float fill) {
  if (context.empty()) throw InvalidArgument("future_frame_projection: empty context");
  const std::size_t n = (max_frames == 0 || max_frames > context.size()) ? context.size() : max_frames;
  std::vector<ProjectedFrame> projected;
  projected.reserve(n);
  for (std::size_t i = context.size() - n; i < context.size(); ++i)
    projected.push_back(
        project_frame(context[i].frame, relative_camera_transform(context[i].pose, target), k, fill));
  return fuse_projections(projected);
}

}  // namespace anwm
