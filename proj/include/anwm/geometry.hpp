#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>

namespace anwm {

inline constexpr double kPi = std::numbers::pi;

// Per-step motion limits for a 1 s action at 5 m/s horizontal, 2 m/s vertical
// and 15 deg/s yaw rate.
struct StepLimits {
  double horizontal = 5.0;
  double vertical = 2.0;
  double yaw = 15.0 * kPi / 180.0;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// 4-DoF agent state: world-frame position (z up) and heading.
/// The constructor normalizes yaw.
struct Pose4 {
  double x = 0, y = 0, z = 0, yaw = 0;

  Pose4() = default;
  Pose4(double x_, double y_, double z_, double yaw_)
      : x(x_), y(y_), z(z_), yaw(normalize_angle(yaw_)) {}

  Eigen::Vector3d position() const { return {x, y, z}; }
  bool finite() const;
};

/// Body-frame relative motion: dx forward, dy left, dz up, dyaw counter-clockwise.
struct Action4 {
  double dx = 0, dy = 0, dz = 0, dyaw = 0;

  Eigen::Vector4d vec() const { return {dx, dy, dz, dyaw}; }
  bool finite() const;
};

/// Pinhole intrinsics. Pixel (u, v) has its center at integer coordinates.
struct Intrinsics {
  double fx = 32, fy = 32, cx = 31.5, cy = 31.5;
  int width = 64, height = 64;

  /// Square image with the given horizontal field of view.
  static Intrinsics from_fov(int width, int height, double hfov_rad);
  void validate() const;
  Eigen::Matrix3d K() const;
  Eigen::Matrix3d K_inv() const;
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  bool is_rigid(double tol = 1e-9) const;
};

/// Kinematic model: translate in the pose's body frame, then apply the yaw change.
Pose4 compose_pose(const Pose4& p, const Action4& a);

/// Inverse of compose_pose.
Action4 action_between(const Pose4& from, const Pose4& to);

/// Camera-to-world rotation. Camera axes: x right, y down, z along the heading.
Eigen::Matrix3d camera_to_world(double yaw);

/// Maps points in the camera frame of `src` into the camera frame of `dst`.
RigidTransform relative_camera_transform(const Pose4& src, const Pose4& dst);

/// Re-expresses a body-frame action for a camera mounted at yaw offset
/// 90 deg * quarter_turns. Quarter turns are applied as exact axis swaps.
Action4 rotate_action_view(const Action4& a, int quarter_turns);

/// Componentwise clamp of an action to the per-step limits.
Action4 clamp_action(const Action4& a, const StepLimits& limits = {});
bool within_limits(const Action4& a, const StepLimits& limits = {});

}  // namespace anwm
