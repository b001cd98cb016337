#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anwm/ffp.hpp"
#include "anwm/rng.hpp"
#include "anwm/scene.hpp"
#include "anwm/wm/model.hpp"

namespace anwm {

/// Depth attached to generated frames so later steps can warp them.
///  Geom:  rendered from scene geometry at the generated pose.
///  Carry: the last real observation reprojected to the generated pose;
///         holes stay invalid.
enum class DepthPolicy { Geom, Carry };

DepthPolicy parse_depth_policy(const std::string& s);
const char* to_string(DepthPolicy p);

/// Predicts the frame seen after `action` from the context (oldest first).
class FramePredictor {
 public:
  virtual ~FramePredictor() = default;
  virtual std::size_t context_size() const = 0;
  /// True when predicted frames carry usable depth.
  virtual bool predicts_depth() const { return false; }
  virtual FrameRGBD predict(std::span<const Observation> context, const Action4& action, const Pose4& target,
                            Rng& rng) = 0;
};

/// The diffusion world model: FFP prior toward the target pose, sampling from
/// pure noise, decoding. Shorter contexts are padded by repeating the oldest
/// frame.
class DiffusionPredictor : public FramePredictor {
 public:
  DiffusionPredictor(const wm::WorldModel<float>& model, const Intrinsics& k, bool stochastic = false);
  std::size_t context_size() const override;
  FrameRGBD predict(std::span<const Observation> context, const Action4& action, const Pose4& target,
                    Rng& rng) override;

  /// Called with the number of past frames handed to the model.
  std::function<void(std::size_t)> on_condition;

 private:
  const wm::WorldModel<float>& model_;
  Intrinsics k_;
  bool stochastic_;
};

/// Renders the true view (oracle world model).
class RendererPredictor : public FramePredictor {
 public:
  RendererPredictor(const Scene& scene, const Intrinsics& k, std::size_t context = 4);
  std::size_t context_size() const override { return context_; }
  bool predicts_depth() const override { return true; }
  FrameRGBD predict(std::span<const Observation>, const Action4&, const Pose4& target, Rng&) override;

 private:
  const Scene& scene_;
  Intrinsics k_;
  std::size_t context_;
};

struct RolloutOptions {
  DepthPolicy depth_policy = DepthPolicy::Geom;
  const Scene* scene = nullptr;  // required by Geom
  Intrinsics intrinsics;
  std::uint64_t seed = 0;
};

struct RolloutState {
  std::deque<Observation> queue;  // at most m entries, oldest first
  Pose4 pose;
  int step = 0;
  std::uint64_t seed = 0;
};

class Rollout {
 public:
  /// Seeds the queue with the most recent m real observations.
  Rollout(FramePredictor& predictor, std::span<const Observation> init, const RolloutOptions& options);

  /// Moves to compose_pose(pose, action), predicts the frame there and
  /// appends it to the queue.
  const FrameRGBD& step(const Action4& action);
  const RolloutState& state() const { return state_; }

 private:
  FramePredictor& predictor_;
  RolloutOptions options_;
  RolloutState state_;
  Observation last_real_;
};

/// One predicted frame per action.
std::vector<FrameRGBD> rollout_trajectory(FramePredictor& predictor, std::span<const Observation> init,
                                          std::span<const Action4> actions, const RolloutOptions& options);

}  // namespace anwm
