#include <doctest.h>

#include <cmath>
#include <limits>

#include "anwm/errors.hpp"
#include "anwm/metrics.hpp"
#include "anwm/planner.hpp"
#include "support.hpp"

using namespace anwm;

TEST_CASE("sample_candidates count, determinism and consistency") {
  PlannerConfig cfg;
  cfg.seed = 3;
  cfg.horizon = 6;
  const Pose4 start(0, 0, 20, 0.3);
  const auto a = sample_candidates(start, cfg);
  const auto b = sample_candidates(start, cfg);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].actions.size() == 6);
    CHECK(a[i].consistent());
    CHECK(a[i].waypoints.front().x == start.x);
    for (std::size_t j = 0; j < a[i].actions.size(); ++j) CHECK(a[i].actions[j].vec() == b[i].actions[j].vec());
  }
  cfg.seed = 4;
  const auto c = sample_candidates(start, cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].actions.size(); ++j) differs = differs || a[i].actions[j].vec() != c[i].actions[j].vec();
  CHECK(differs);
  cfg.candidates = 0;
  CHECK_THROWS_AS(sample_candidates(start, cfg), InvalidArgument);
}

TEST_CASE("zero noise with a hint is greedy toward the hint") {
  PlannerConfig cfg;
  cfg.sigma_pos = cfg.sigma_yaw = 0;
  cfg.horizon = 4;
  const auto c = sample_candidates(Pose4(0, 0, 20, 0), cfg, Eigen::Vector3d(0, 1, 0));
  for (const auto& t : c) {
    for (const auto& a : t.actions) {
      CHECK(a.dy == 5);  // Left is the primitive aligned with +y at yaw 0
      CHECK(a.dx == 0);
    }
    CHECK(t.actions.size() == 4);
  }
  const auto p = primitive_probabilities(0, Eigen::Vector3d(1, 0, 0), cfg);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(p[0] > p[1]);
  CHECK(p[0] / p[6] == doctest::Approx(std::exp(1.0)));  // alignment 1 vs 0 at temperature 1
}

TEST_CASE("perturb_waypoints") {
  const Pose4 start(1, 2, 20, 0);
  const std::vector<Action4> acts(5, Action4{5, 0, 0, 0});
  const auto t = Trajectory::from_actions(start, acts);
  const auto same = perturb_waypoints(t, 0, 0, 1);
  for (std::size_t i = 0; i < t.waypoints.size(); ++i) CHECK(same.waypoints[i].x == t.waypoints[i].x);
  for (int seed = 0; seed < 20; ++seed) {
    const auto p = perturb_waypoints(t, 3.0, 0.3, static_cast<std::uint64_t>(seed));
    CHECK(p.waypoints.front().x == start.x);
    CHECK(p.waypoints.front().y == start.y);
    CHECK(p.consistent({}, 1e-6));
  }
  CHECK_THROWS_AS(perturb_waypoints(t, -1, 0, 1), InvalidArgument);
}

TEST_CASE("quantize_to_actions") {
  const std::vector<Pose4> w{{0, 0, 0, 0}, {5, 0, 0, 0}};
  const auto a = quantize_to_actions(w);
  REQUIRE(a.size() == 1);
  CHECK(a[0].dx == doctest::Approx(5));
  CHECK(quantize_to_actions(std::vector<Pose4>{{0, 0, 0, 0}, {7, 0, 0, 0}})[0].dx == 5);
  CHECK(quantize_to_actions(std::vector<Pose4>{{0, 0, 0, 0}}).empty());
  const auto z = quantize_to_actions(std::vector<Pose4>{{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}});
  REQUIRE(z.size() == 2);
  for (const auto& x : z) CHECK(x.vec().isZero(0));
}

TEST_CASE("rank_scores ordering, ties and failures") {
  const std::vector<double> s{0.3, 0.1, 0.1, 0.5};
  const auto r = rank_scores(s);
  CHECK(r.selected == 1);
  CHECK(r.order == std::vector<std::size_t>{1, 2, 0, 3});
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(rank_scores(std::vector<double>{inf, 0.4, std::nan("")}).selected == 1);
  CHECK_THROWS_AS(rank_scores(std::vector<double>{inf, inf}), RankingFailed);
  // a strictly worse extra candidate never changes the selection
  const auto more = rank_scores(std::vector<double>{0.3, 0.1, 0.1, 0.5, 0.9});
  CHECK(more.selected == r.selected);
}

TEST_CASE("rank_candidates with the renderer picks an exact goal match") {
  const Clip c = testing::make_clip(51, 6, 16);
  const Scene s = build_scene(51, SceneConfig{});
  RendererPredictor pred(s, c.intrinsics);
  std::vector<Trajectory> cands;
  cands.push_back(Trajectory::from_actions(c.poses[0], std::vector<Action4>{{0, 0, 2, 0}, {0, 0, 2, 0}}));
  cands.push_back(Trajectory::from_actions(c.poses[0], std::span(c.actions).first(3)));
  cands.push_back(Trajectory::from_actions(c.poses[0], std::vector<Action4>{{0, 0, 0, 0.2}}));
  RolloutOptions o;
  o.scene = &s;
  o.intrinsics = c.intrinsics;
  const std::vector<Observation> init{{c.frames[0], c.poses[0]}};
  for (const char* metric : {"mse", "ssim"}) {
    const auto r = rank_candidates(pred, init, cands, c.frames[3], image_distance(metric), o);
    CHECK(r.selected == 1);
    CHECK(r.scores[1] == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(image_distance("lpips"), InvalidArgument);
  register_image_distance("const", [](const FrameRGBD&, const FrameRGBD&) { return 1.0; });
  const auto r = rank_candidates(pred, init, cands, c.frames[3], image_distance("const"), o);
  CHECK(r.selected == 0);
}
