#include <doctest.h>

#include "anwm/errors.hpp"
#include "anwm/rollout.hpp"
#include "support.hpp"

using namespace anwm;

namespace {

std::vector<Observation> context_of(const Clip& c, int n) {
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) obs.push_back({c.frames[i], c.poses[i]});
  return obs;
}

RolloutOptions options(const Scene& s, const Clip& c, DepthPolicy p = DepthPolicy::Geom) {
  RolloutOptions o;
  o.scene = &s;
  o.intrinsics = c.intrinsics;
  o.depth_policy = p;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_CASE("queue length and pose bookkeeping") {
  const Clip c = testing::make_clip(41, 10, 8);
  const Scene s = build_scene(41, SceneConfig{});
  RendererPredictor pred(s, c.intrinsics, 4);
  const auto init = context_of(c, 2);
  Rollout r(pred, init, options(s, c));
  CHECK(r.state().queue.size() == 2);
  Pose4 expect = init.back().pose;
  for (int k = 1; k <= 5; ++k) {
    const Action4 a{5, 0, 0, 0};
    r.step(a);
    expect = compose_pose(expect, a);
    CHECK(r.state().queue.size() == static_cast<std::size_t>(std::min(4, 2 + k)));
    CHECK(r.state().step == k);
  }
  CHECK((r.state().pose.position() - expect.position()).norm() < 1e-12);

  Rollout origin(pred, std::vector<Observation>{{c.frames[0], Pose4{}}}, options(s, c));
  for (int i = 0; i < 4; ++i) origin.step({5, 0, 0, 0});
  CHECK(origin.state().pose.x == doctest::Approx(20));
  CHECK(origin.state().pose.y == 0);
  CHECK(origin.state().pose.yaw == 0);
}

TEST_CASE("renderer predictor reproduces the clip") {
  const Clip c = testing::make_clip(42, 12, 8);
  const Scene s = build_scene(42, SceneConfig{});
  RendererPredictor pred(s, c.intrinsics);
  const auto frames = rollout_trajectory(pred, context_of(c, 4), std::span(c.actions).subspan(3, 8), options(s, c));
  REQUIRE(frames.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(frames[i] == c.frames[4 + i]);
  CHECK(rollout_trajectory(pred, context_of(c, 4), {}, options(s, c)).empty());
}

TEST_CASE("diffusion rollout is deterministic and respects the context size") {
  const auto cfg = wm::ModelConfig::micro();
  wm::WorldModel<float> model(cfg, 3);
  Rng rng(1);
  for (std::size_t i = 0; i < model.params().size(); ++i)
    model.params()[i] += nn::normal_init<float>(model.params()[i].rows(), model.params()[i].cols(), 0.05, rng);
  const Clip c = testing::make_clip(43, 48, 8);
  const Scene s = build_scene(43, SceneConfig{});
  DiffusionPredictor pred(model, c.intrinsics);
  std::size_t max_seen = 0, calls = 0;
  pred.on_condition = [&](std::size_t n) {
    max_seen = std::max(max_seen, n);
    ++calls;
  };
  const auto init = context_of(c, 16);
  const std::span<const Action4> acts(c.actions.data() + 15, 32);
  const auto a = rollout_trajectory(pred, init, acts, options(s, c));
  const auto b = rollout_trajectory(pred, init, acts, options(s, c));
  REQUIRE(a.size() == 32);
  for (int i = 0; i < 32; ++i) CHECK(a[i] == b[i]);
  CHECK(max_seen == static_cast<std::size_t>(cfg.context));
  CHECK(calls == 64);
  for (const auto& f : a)
    for (int ch = 0; ch < 3; ++ch) CHECK((f.rgb[ch] == f.rgb[ch].unaryExpr([](float v) { return quantize8(v); })).all());
  auto other = options(s, c);
  other.seed = 6;
  pred.on_condition = nullptr;
  DiffusionPredictor stoch(model, c.intrinsics, true);
  const auto s1 = rollout_trajectory(stoch, init, acts.first(2), options(s, c));
  const auto s2 = rollout_trajectory(stoch, init, acts.first(2), other);
  CHECK_FALSE(s1[1] == s2[1]);
}

TEST_CASE("depth policies") {
  const auto cfg = wm::ModelConfig::micro();
  wm::WorldModel<float> model(cfg, 4);
  const Clip c = testing::make_clip(44, 8, 8);
  const Scene s = build_scene(44, SceneConfig{});
  DiffusionPredictor pred(model, c.intrinsics);
  const auto init = context_of(c, 4);

  Rollout geom(pred, init, options(s, c, DepthPolicy::Geom));
  const auto& g = geom.step(c.actions[3]);
  const auto truth = render(s, c.poses[4], c.intrinsics);
  CHECK((g.depth == truth.depth).all());
  CHECK((g.valid == truth.valid).all());

  Rollout carry(pred, init, options(s, c, DepthPolicy::Carry));
  const auto& k = carry.step(c.actions[3]);
  const auto proj = future_frame_projection(std::span(init).last(1), c.poses[4], c.intrinsics);
  CHECK((k.depth == proj.depth).all());
  CHECK((k.valid == proj.valid).all());

  RolloutOptions none;
  none.intrinsics = c.intrinsics;
  CHECK_THROWS_AS(Rollout(pred, init, none), InvalidArgument);
  CHECK_THROWS_AS(Rollout(pred, {}, options(s, c)), InvalidArgument);
  CHECK(parse_depth_policy("carry") == DepthPolicy::Carry);
  CHECK_THROWS_AS(parse_depth_policy("lidar"), InvalidArgument);
}
