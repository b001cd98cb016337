#include "anwm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anwm/errors.hpp"

namespace anwm {

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

bool Pose4::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(yaw);
}

bool Action4::finite() const {
  return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dz) && std::isfinite(dyaw);
}

Intrinsics Intrinsics::from_fov(int width, int height, double hfov_rad) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fx = 0.5 * width / std::tan(0.5 * hfov_rad);
  k.fy = k.fx;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("intrinsics: empty image");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
    throw InvalidArgument("intrinsics: principal point outside the image");
}

Eigen::Matrix3d Intrinsics::K() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Eigen::Matrix3d Intrinsics::K_inv() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0, -cx / fx, 0, 1.0 / fy, -cy / fy, 0, 0, 1;
  return k;
}

bool RigidTransform::is_rigid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

namespace {

void require_finite(const Pose4& p, const char* what) {
  if (!p.finite()) throw InvalidArgument(std::string(what) + ": non-finite pose");
}

void require_finite(const Action4& a, const char* what) {
  if (!a.finite()) throw InvalidArgument(std::string(what) + ": non-finite action");
}

}  // namespace

Pose4 compose_pose(const Pose4& p, const Action4& a) {
  require_finite(p, "compose_pose");
  require_finite(a, "compose_pose");
  const double c = std::cos(p.yaw), s = std::sin(p.yaw);
  return Pose4(p.x + c * a.dx - s * a.dy, p.y + s * a.dx + c * a.dy, p.z + a.dz, p.yaw + a.dyaw);
}

Action4 action_between(const Pose4& from, const Pose4& to) {
  require_finite(from, "action_between");
  require_finite(to, "action_between");
  const double c = std::cos(from.yaw), s = std::sin(from.yaw);
  const double wx = to.x - from.x, wy = to.y - from.y;
  return {c * wx + s * wy, -s * wx + c * wy, to.z - from.z, normalize_angle(to.yaw - from.yaw)};
}

Eigen::Matrix3d camera_to_world(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix3d r;
  // columns: camera x (right), camera y (down), camera z (forward)
  r << s, 0, c,
      -c, 0, s,
       0, -1, 0;
  return r;
}

RigidTransform relative_camera_transform(const Pose4& src, const Pose4& dst) {
  require_finite(src, "relative_camera_transform");
  require_finite(dst, "relative_camera_transform");
  const Eigen::Matrix3d r_src = camera_to_world(src.yaw);
  const Eigen::Matrix3d r_dst_t = camera_to_world(dst.yaw).transpose();
  RigidTransform t;
  t.rotation = r_dst_t * r_src;
  t.translation = r_dst_t * (src.position() - dst.position());
  return t;
}

Action4 rotate_action_view(const Action4& a, int quarter_turns) {
  if (quarter_turns < 0 || quarter_turns > 3)
    throw InvalidArgument("rotate_action_view: quarter_turns must be in 0..3, got " +
                          std::to_string(quarter_turns));
  Action4 r = a;
  for (int i = 0; i < quarter_turns; ++i) {
    const double dx = r.dx;
    r.dx = r.dy;
    r.dy = -dx;
  }
  return r;
}

Action4 clamp_action(const Action4& a, const StepLimits& lim) {
  return {std::clamp(a.dx, -lim.horizontal, lim.horizontal),
          std::clamp(a.dy, -lim.horizontal, lim.horizontal),
          std::clamp(a.dz, -lim.vertical, lim.vertical),
          std::clamp(a.dyaw, -lim.yaw, lim.yaw)};
}

bool within_limits(const Action4& a, const StepLimits& lim) {
  return std::abs(a.dx) <= lim.horizontal && std::abs(a.dy) <= lim.horizontal &&
         std::abs(a.dz) <= lim.vertical && std::abs(a.dyaw) <= lim.yaw;
}

}  // namespace anwm
