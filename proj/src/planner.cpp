#include "anwm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "anwm/dataset.hpp"
#include "anwm/errors.hpp"
#include "anwm/log.hpp"
#include "anwm/metrics.hpp"

namespace anwm {

Trajectory Trajectory::from_actions(const Pose4& start, std::span<const Action4> actions) {
  Trajectory t;
  t.waypoints.push_back(start);
  for (const auto& a : actions) {
    t.actions.push_back(a);
    t.waypoints.push_back(compose_pose(t.waypoints.back(), a));
  }
  return t;
}

bool Trajectory::consistent(const StepLimits& limits, double tol) const {
  if (waypoints.size() != actions.size() + 1) return false;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!within_limits(actions[i], limits)) return false;
    const Pose4 next = compose_pose(waypoints[i], actions[i]);
    if ((next.position() - waypoints[i + 1].position()).norm() > tol) return false;
    if (std::abs(normalize_angle(next.yaw - waypoints[i + 1].yaw)) > tol) return false;
  }
  return true;
}

void PlannerConfig::validate() const {
  if (candidates < 1) throw InvalidArgument("planner: candidates must be >= 1");
  if (horizon < 1) throw InvalidArgument("planner: horizon must be >= 1");
  if (!(sigma_pos >= 0) || !(sigma_yaw >= 0)) throw InvalidArgument("planner: sigmas must be >= 0");
  if (!(temperature > 0)) throw InvalidArgument("planner: temperature must be positive");
  if (!std::isfinite(goal_bias)) throw InvalidArgument("planner: goal_bias must be finite");
}

namespace {

std::vector<double> alignments(double yaw, const Eigen::Vector3d& hint, const StepLimits& limits) {
  const auto prims = action_primitives(limits);
  const double hn = hint.norm();
  std::vector<double> out;
  for (const auto& a : prims) {
    const Eigen::Vector3d d = compose_pose(Pose4(0, 0, 0, yaw), a).position();
    out.push_back(d.norm() > 0 && hn > 0 ? d.dot(hint) / (d.norm() * hn) : 0.0);
  }
  return out;
}

std::size_t draw(const std::vector<double>& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace

std::vector<double> primitive_probabilities(double yaw, const Eigen::Vector3d& hint, const PlannerConfig& cfg) {
  const auto al = alignments(yaw, hint, cfg.limits);
  std::vector<double> p(al.size());
  const double top = *std::max_element(al.begin(), al.end());
  for (std::size_t i = 0; i < al.size(); ++i) p[i] = std::exp(cfg.goal_bias * (al[i] - top) / cfg.temperature);
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= z;
  return p;
}

std::vector<Trajectory> sample_candidates(const Pose4& start, const PlannerConfig& cfg,
                                          const std::optional<Eigen::Vector3d>& goal_hint) {
  cfg.validate();
  const auto prims = action_primitives(cfg.limits);
  const bool greedy = goal_hint && cfg.sigma_pos == 0 && cfg.sigma_yaw == 0;
  std::vector<Trajectory> out;
  for (int c = 0; c < cfg.candidates; ++c) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(c));
    Rng rng(derive_seed(seed, "primitives"));
    std::vector<Action4> actions;
    Pose4 pose = start;
    for (int s = 0; s < cfg.horizon; ++s) {
      std::size_t idx;
      if (!goal_hint) {
        idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(prims.size()) - 1));
      } else if (greedy) {
        const auto al = alignments(pose.yaw, *goal_hint, cfg.limits);
        idx = static_cast<std::size_t>(std::max_element(al.begin(), al.end()) - al.begin());
      } else {
        idx = draw(primitive_probabilities(pose.yaw, *goal_hint, cfg), rng);
      }
      actions.push_back(prims[idx]);
      pose = compose_pose(pose, prims[idx]);
    }
    out.push_back(perturb_waypoints(Trajectory::from_actions(start, actions), cfg.sigma_pos, cfg.sigma_yaw,
                                    derive_seed(seed, "perturb"), cfg.limits));
  }
  return out;
}

Trajectory perturb_waypoints(const Trajectory& t, double sigma_pos, double sigma_yaw, std::uint64_t seed,
                             const StepLimits& limits) {
  if (!(sigma_pos >= 0) || !(sigma_yaw >= 0)) throw InvalidArgument("perturb_waypoints: sigmas must be >= 0");
  if (t.waypoints.empty()) return t;
  if (sigma_pos == 0 && sigma_yaw == 0) return t;
  Rng rng(seed);
  Trajectory out;
  out.waypoints.push_back(t.waypoints.front());
  for (std::size_t i = 1; i < t.waypoints.size(); ++i) {
    const Pose4& w = t.waypoints[i];
    const double nx = sigma_pos * rng.normal(), ny = sigma_pos * rng.normal(), nz = sigma_pos * rng.normal();
    const double nyaw = sigma_yaw * rng.normal();
    const Pose4 noisy(w.x + nx, w.y + ny, w.z + nz, w.yaw + nyaw);
    const Action4 a = clamp_action(action_between(out.waypoints.back(), noisy), limits);
    out.actions.push_back(a);
    out.waypoints.push_back(compose_pose(out.waypoints.back(), a));
  }
  return out;
}

std::vector<Action4> quantize_to_actions(std::span<const Pose4> waypoints, const StepLimits& limits) {
  std::vector<Action4> out;
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    out.push_back(clamp_action(action_between(waypoints[i - 1], waypoints[i]), limits));
  return out;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, ImageDistance>& registry() {
  static std::map<std::string, ImageDistance> r = {
      {"mse", [](const FrameRGBD& a, const FrameRGBD& b) { return mse(a, b); }},
      {"ssim", [](const FrameRGBD& a, const FrameRGBD& b) { return 1.0 - ssim(a, b); }},
  };
  return r;
}

}  // namespace

ImageDistance image_distance(const std::string& id) {
  std::lock_guard lock(registry_mutex());
  const auto it = registry().find(id);
  if (it == registry().end()) throw InvalidArgument("unknown image distance: " + id);
  return it->second;
}

void register_image_distance(const std::string& id, ImageDistance fn) {
  if (!fn) throw InvalidArgument("register_image_distance: empty function");
  std::lock_guard lock(registry_mutex());
  registry()[id] = std::move(fn);
}

RankingResult rank_scores(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("rank_scores: no candidates");
  RankingResult r;
  for (double s : scores) {
    const bool bad = !std::isfinite(s);
    r.failed.push_back(bad);
    r.scores.push_back(bad ? std::numeric_limits<double>::infinity() : s);
  }
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) { return r.scores[a] < r.scores[b]; });
  if (r.failed[r.order.front()]) throw RankingFailed("every candidate failed");
  r.selected = r.order.front();
  return r;
}

RankingResult rank_candidates(FramePredictor& predictor, std::span<const Observation> init,
                              std::span<const Trajectory> candidates, const FrameRGBD& goal,
                              const ImageDistance& distance, const RolloutOptions& options) {
  if (candidates.empty()) throw InvalidArgument("rank_candidates: no candidates");
  std::vector<double> scores;
  std::vector<FrameRGBD> finals;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    try {
      if (candidates[c].actions.empty()) throw InvalidArgument("candidate has no actions");
      RolloutOptions opt = options;
      opt.seed = derive_seed(options.seed, static_cast<std::uint64_t>(c));
      auto frames = rollout_trajectory(predictor, init, candidates[c].actions, opt);
      scores.push_back(distance(frames.back(), goal));
      finals.push_back(std::move(frames.back()));
    } catch (const std::exception& e) {
      log::warn("candidate " + std::to_string(c) + " failed: " + e.what());
      scores.push_back(std::numeric_limits<double>::infinity());
      finals.emplace_back();
    }
  }
  RankingResult r = rank_scores(scores);
  r.final_frames = std::move(finals);
  return r;
}

}  // namespace anwm
