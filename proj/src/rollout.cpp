#include "anwm/rollout.hpp"

#include <algorithm>

#include "anwm/errors.hpp"

namespace anwm {

DepthPolicy parse_depth_policy(const std::string& s) {
  if (s == "geom") return DepthPolicy::Geom;
  if (s == "carry") return DepthPolicy::Carry;
  throw InvalidArgument("depth policy must be geom or carry, got " + s);
}

const char* to_string(DepthPolicy p) { return p == DepthPolicy::Geom ? "geom" : "carry"; }

DiffusionPredictor::DiffusionPredictor(const wm::WorldModel<float>& model, const Intrinsics& k, bool stochastic)
    : model_(model), k_(k), stochastic_(stochastic) {
  const auto& c = model.config();
  if (k.width != c.frame_width || k.height != c.frame_height)
    throw InvalidArgument("intrinsics size does not match the model frame size");
}

std::size_t DiffusionPredictor::context_size() const { return static_cast<std::size_t>(model_.config().context); }

FrameRGBD DiffusionPredictor::predict(std::span<const Observation> context, const Action4& action,
                                      const Pose4& target, Rng& rng) {
  if (context.empty()) throw InvalidArgument("predict: empty context");
  const std::size_t m = context_size();
  if (context.size() > m) context = context.last(m);
  const auto prior = future_frame_projection(context, target, k_,
                                             static_cast<std::size_t>(model_.config().ffp_context));
  std::vector<FrameRGBD> past;
  for (std::size_t i = context.size(); i < m; ++i) past.push_back(context.front().frame);
  for (const auto& o : context) past.push_back(o.frame);
  if (on_condition) on_condition(past.size());
  const auto cond = model_.encode_condition(past, prior);
  FrameRGBD out = model_.codec().decode(model_.sample(cond, action, rng, stochastic_));
  for (auto& ch : out.rgb) ch = ch.unaryExpr([](float v) { return quantize8(v); });
  return out;
}

RendererPredictor::RendererPredictor(const Scene& scene, const Intrinsics& k, std::size_t context)
    : scene_(scene), k_(k), context_(context) {}

FrameRGBD RendererPredictor::predict(std::span<const Observation>, const Action4&, const Pose4& target, Rng&) {
  return render(scene_, target, k_);
}

Rollout::Rollout(FramePredictor& predictor, std::span<const Observation> init, const RolloutOptions& options)
    : predictor_(predictor), options_(options) {
  if (init.empty()) throw InvalidArgument("rollout: the initial context needs at least one observation");
  if (options.depth_policy == DepthPolicy::Geom && !options.scene && !predictor.predicts_depth())
    throw InvalidArgument("rollout: geom depth policy needs a scene");
  const std::size_t m = std::max<std::size_t>(1, predictor.context_size());
  const auto recent = init.size() > m ? init.last(m) : init;
  state_.queue.assign(recent.begin(), recent.end());
  state_.pose = init.back().pose;
  state_.seed = options.seed;
  last_real_ = init.back();
}

const FrameRGBD& Rollout::step(const Action4& action) {
  const Pose4 target = compose_pose(state_.pose, action);
  const std::vector<Observation> ctx(state_.queue.begin(), state_.queue.end());
  Rng rng(derive_seed(state_.seed, static_cast<std::uint64_t>(state_.step)));
  FrameRGBD frame = predictor_.predict(ctx, action, target, rng);
  if (!predictor_.predicts_depth()) {
    if (options_.depth_policy == DepthPolicy::Geom) {
      const auto truth = render(*options_.scene, target, options_.intrinsics);
      frame.depth = truth.depth;
      frame.valid = truth.valid;
    } else {
      const auto carried = future_frame_projection(std::span(&last_real_, 1), target, options_.intrinsics);
      frame.depth = carried.depth;
      frame.valid = carried.valid;
    }
  }
  state_.queue.push_back({std::move(frame), target});
  while (state_.queue.size() > std::max<std::size_t>(1, predictor_.context_size())) state_.queue.pop_front();
  state_.pose = target;
  ++state_.step;
  return state_.queue.back().frame;
}

std::vector<FrameRGBD> rollout_trajectory(FramePredictor& predictor, std::span<const Observation> init,
                                          std::span<const Action4> actions, const RolloutOptions& options) {
  std::vector<FrameRGBD> out;
  if (actions.empty()) return out;
  Rollout r(predictor, init, options);
  for (const auto& a : actions) out.push_back(r.step(a));
  return out;
}

}  // namespace anwm
