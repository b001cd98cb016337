#include <doctest.h>

#include <Eigen/Geometry>

#include "anwm/errors.hpp"
#include "anwm/geometry.hpp"
#include "anwm/rng.hpp"

using namespace anwm;

namespace {

// Homogeneous world-from-body transform built from an axis-angle rotation.
Eigen::Isometry3d body_to_world(const Pose4& p) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = Eigen::AngleAxisd(p.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  t.translation() = p.position();
  return t;
}

Pose4 random_pose(Rng& rng) {
  return {rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(0, 60), rng.uniform(-kPi, kPi)};
}

Action4 random_action(Rng& rng) {
  return {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2, 2), rng.uniform(-0.26, 0.26)};
}

}  // namespace

TEST_CASE("normalize_angle maps into (-pi, pi]") {
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(0.25) == doctest::Approx(0.25));
  CHECK(normalize_angle(2 * kPi + 0.5) == doctest::Approx(0.5));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = normalize_angle(rng.uniform(-50, 50));
    CHECK(a > -kPi);
    CHECK(a <= kPi);
  }
  CHECK(Pose4(0, 0, 0, 7 * kPi).yaw == doctest::Approx(kPi));
}

TEST_CASE("compose_pose matches a homogeneous-transform oracle") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const Pose4 p = random_pose(rng);
    const Action4 a = random_action(rng);
    const Pose4 q = compose_pose(p, a);
    const Eigen::Vector3d expect = body_to_world(p) * Eigen::Vector3d(a.dx, a.dy, a.dz);
    CHECK((q.position() - expect).norm() < 1e-9);
    CHECK(std::abs(normalize_angle(q.yaw - (p.yaw + a.dyaw))) < 1e-12);
  }
}

TEST_CASE("action_between inverts compose_pose") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Pose4 p = random_pose(rng);
    const Action4 a = random_action(rng);
    const Action4 b = action_between(p, compose_pose(p, a));
    CHECK((a.vec() - b.vec()).cwiseAbs().maxCoeff() < 1e-9);
    const Pose4 q = random_pose(rng);
    const Pose4 r = compose_pose(p, action_between(p, q));
    CHECK((r.position() - q.position()).norm() < 1e-9);
    CHECK(std::abs(normalize_angle(r.yaw - q.yaw)) < 1e-9);
  }
}

TEST_CASE("four forward steps from the origin") {
  Pose4 p;
  for (int i = 0; i < 4; ++i) p = compose_pose(p, {5, 0, 0, 0});
  CHECK(p.x == doctest::Approx(20));
  CHECK(p.y == doctest::Approx(0));
  CHECK(p.z == doctest::Approx(0));
  CHECK(p.yaw == doctest::Approx(0));
}

TEST_CASE("camera_to_world is a proper rotation with z along the heading") {
  for (double yaw : {0.0, 0.3, -2.0, kPi}) {
    const Eigen::Matrix3d r = camera_to_world(yaw);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0));
    CHECK((r.col(2) - Eigen::Vector3d(std::cos(yaw), std::sin(yaw), 0)).norm() < 1e-12);
    CHECK((r.col(1) - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
  }
}

TEST_CASE("relative_camera_transform agrees with world round trips") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Pose4 a = random_pose(rng), b = random_pose(rng);
    const RigidTransform t = relative_camera_transform(a, b);
    CHECK(t.is_rigid());
    const Eigen::Vector3d pc(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(1, 30));
    const Eigen::Vector3d world = camera_to_world(a.yaw) * pc + a.position();
    const Eigen::Vector3d expect = camera_to_world(b.yaw).transpose() * (world - b.position());
    CHECK((t.apply(pc) - expect).norm() < 1e-9);
  }
  const RigidTransform id = relative_camera_transform({1, 2, 3, 0.4}, {1, 2, 3, 0.4});
  CHECK((id.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(id.translation.norm() < 1e-12);
}

TEST_CASE("rotate_action_view keeps the world displacement") {
  Rng rng(5);
  for (int q = 0; q < 4; ++q) {
    const Pose4 p = random_pose(rng);
    const Action4 a = random_action(rng);
    const Pose4 mounted(p.x, p.y, p.z, p.yaw + q * kPi / 2);
    const Pose4 moved = compose_pose(p, a);
    const Pose4 moved_m = compose_pose(mounted, rotate_action_view(a, q));
    CHECK((moved.position() - moved_m.position()).norm() < 1e-9);
    CHECK(rotate_action_view(a, q).dyaw == a.dyaw);
  }
  const Action4 r = rotate_action_view({5, 0, 0, 0}, 1);
  CHECK(r.dx == 0);
  CHECK(r.dy == -5);
  CHECK_THROWS_AS(rotate_action_view({}, 4), InvalidArgument);
  CHECK_THROWS_AS(rotate_action_view({}, -1), InvalidArgument);
}

TEST_CASE("clamp_action enforces the per-step limits") {
  const Action4 c = clamp_action({7, -9, 3, 1.0});
  CHECK(c.dx == 5);
  CHECK(c.dy == -5);
  CHECK(c.dz == 2);
  CHECK(c.dyaw == doctest::Approx(15.0 * kPi / 180.0));
  CHECK(within_limits(c));
  CHECK_FALSE(within_limits({5.1, 0, 0, 0}));
  CHECK(within_limits({5, 0, 0, 0}));
}

TEST_CASE("intrinsics") {
  const Intrinsics k = Intrinsics::from_fov(64, 64, kPi / 2);
  CHECK(k.fx == doctest::Approx(32));
  CHECK(k.cx == doctest::Approx(31.5));
  CHECK((k.K() * k.K_inv() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  Intrinsics bad;
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
