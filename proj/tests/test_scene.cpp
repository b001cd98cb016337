#include <doctest.h>

#include "anwm/errors.hpp"
#include "anwm/scene.hpp"
#include "support.hpp"

using namespace anwm;

namespace {

SceneConfig single_wall() {
  SceneConfig c;
  c.box_count_min = c.box_count_max = 0;
  Box wall;
  wall.min = {20, -30, 0};
  wall.max = {24, 30, 40};
  wall.texture.kind = TextureKind::Solid;
  wall.texture.color_a = {0.8, 0.2, 0.1};
  c.extra_boxes.push_back(wall);
  return c;
}

}  // namespace

TEST_CASE("build_scene is deterministic and respects the box count range") {
  const Scene a = build_scene(11, SceneConfig{});
  const Scene b = build_scene(11, SceneConfig{});
  REQUIRE(a.boxes.size() == b.boxes.size());
  CHECK(a.boxes.size() >= 80);
  CHECK(a.boxes.size() <= 100);
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    CHECK(a.boxes[i].min == b.boxes[i].min);
    CHECK(a.boxes[i].max == b.boxes[i].max);
    CHECK(a.boxes[i].min.z() >= 0);
  }
  CHECK(scene_to_json(a) == scene_to_json(b));
  CHECK(scene_to_json(a) != scene_to_json(build_scene(12, SceneConfig{})));
}

TEST_CASE("ray casting hits a known wall at its planar distance") {
  const Scene s = build_scene(0, single_wall());
  const Intrinsics k = testing::square_intrinsics(32);
  const Pose4 pose(0, 0, 10, 0);
  const auto hit = cast_pixel(s, pose, k, k.cx, k.cy);
  REQUIRE(hit);
  CHECK(hit->depth == doctest::Approx(20.0));
  CHECK(hit->color.x() > hit->color.y());
  // Off-axis rays report planar (z) depth, not range.
  const auto side = cast_pixel(s, pose, k, 0.0, k.cy);
  REQUIRE(side);
  CHECK(side->depth == doctest::Approx(20.0));
}

TEST_CASE("render marks sky invalid and quantizes colour") {
  SceneConfig c = single_wall();
  c.extra_boxes.clear();
  const Scene s = build_scene(0, c);
  const Intrinsics k = testing::square_intrinsics(16);
  const FrameRGBD f = render(s, Pose4(0, 0, 10, 0), k);
  CHECK_FALSE(f.valid(0, 8));   // looking up: sky
  CHECK(f.valid(15, 8));        // looking down: ground
  CHECK(f.depth(0, 8) == 0.f);
  CHECK(f.depth(15, 8) > 0.f);
  for (int ch = 0; ch < 3; ++ch)
    for (int i = 0; i < f.rgb[ch].size(); ++i) CHECK(quantize8(f.rgb[ch](i)) == f.rgb[ch](i));
  // Ground below the camera: planar depth of the bottom row follows h * fy / (v - cy).
  const double expect = 10.0 * k.fy / (15 - k.cy);
  CHECK(f.depth(15, 8) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("collision rules") {
  const Scene s = build_scene(0, single_wall());
  CHECK(s.collides({22, 0, 10}));
  CHECK(s.collides({19, 0, 10}, 2.0));
  CHECK_FALSE(s.collides({10, 0, 10}, 2.0));
  CHECK(s.collides({0, 0, 1}, 2.0));
  CHECK(s.collides({500, 0, 10}));
}

TEST_CASE("scene config JSON round trip and validation") {
  const SceneConfig c = single_wall();
  const SceneConfig back = scene_config_from_json(scene_config_to_json(c));
  CHECK(scene_config_to_json(back) == scene_config_to_json(c));
  CHECK_THROWS_AS(scene_config_from_json("{\"bogus\": 1}"), InvalidArgument);
  CHECK_THROWS_AS(scene_config_from_json("{\"box_count_min\": 5, \"box_count_max\": 2}"), InvalidArgument);
  const SceneConfig short_form = scene_config_from_json("{\"box_count\": 3} // comment");
  CHECK(short_form.box_count_min == 3);
  CHECK(short_form.box_count_max == 3);
}
