#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anwm/rollout.hpp"

namespace anwm {

/// Waypoints w_0..w_n with actions[i] moving w_i to w_{i+1}.
struct Trajectory {
  std::vector<Pose4> waypoints;
  std::vector<Action4> actions;

  static Trajectory from_actions(const Pose4& start, std::span<const Action4> actions);
  /// Every action within limits and waypoints follow from compose_pose within tol.
  bool consistent(const StepLimits& limits = {}, double tol = 1e-6) const;
};

struct PlannerConfig {
  int candidates = 5;
  int horizon = 8;
  double sigma_pos = 1.0;                  // metres
  double sigma_yaw = 5.0 * kPi / 180.0;  // radians
  double goal_bias = 1.0;                  // weight on primitive/hint alignment
  double temperature = 1.0;
  std::uint64_t seed = 0;
  StepLimits limits;

  void validate() const;
};

/// Softmax(goal_bias * alignment / temperature) over the primitives, where
/// alignment is the cosine between a primitive's world displacement at
/// `yaw` and the hint (0 for pure rotations).
std::vector<double> primitive_probabilities(double yaw, const Eigen::Vector3d& hint, const PlannerConfig& cfg);

/// `cfg.candidates` primitive sequences of `cfg.horizon` steps, each then
/// perturbed with perturb_waypoints. Primitives are drawn uniformly without a
/// hint and from primitive_probabilities with one; with zero sigmas and a
/// hint the most aligned primitive is taken greedily (lowest index on ties).
std::vector<Trajectory> sample_candidates(const Pose4& start, const PlannerConfig& cfg,
                                          const std::optional<Eigen::Vector3d>& goal_hint = std::nullopt);

/// Gaussian noise on the position and yaw of every waypoint after the first,
/// then clamp-and-reproject: each action is action_between(previous
/// reprojected waypoint, noisy waypoint) clamped to the limits, and the
/// waypoint is replaced by composing that action.
Trajectory perturb_waypoints(const Trajectory& t, double sigma_pos, double sigma_yaw, std::uint64_t seed,
                             const StepLimits& limits = {});

/// action_between of consecutive waypoints, clamped to the limits.
std::vector<Action4> quantize_to_actions(std::span<const Pose4> waypoints, const StepLimits& limits = {});

/// Distance between a predicted frame and the goal (lower is closer).
using ImageDistance = std::function<double(const FrameRGBD& pred, const FrameRGBD& goal)>;

/// "mse", "ssim" (1 - SSIM) or a name added with register_image_distance.
ImageDistance image_distance(const std::string& id);
void register_image_distance(const std::string& id, ImageDistance fn);

struct RankingResult {
  std::vector<double> scores;  // +inf for failed candidates
  std::vector<bool> failed;
  std::vector<FrameRGBD> final_frames;
  std::vector<std::size_t> order;  // ascending score, ties by index
  std::size_t selected = 0;
};

/// Order and argmin of a score vector; throws RankingFailed when every score
/// is infinite or NaN.
RankingResult rank_scores(std::span<const double> scores);

/// Rolls out every candidate from `init` and scores its last frame against
/// `goal`. Failed rollouts score +inf.
RankingResult rank_candidates(FramePredictor& predictor, std::span<const Observation> init,
                              std::span<const Trajectory> candidates, const FrameRGBD& goal,
                              const ImageDistance& distance, const RolloutOptions& options);

}  // namespace anwm
