#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anwm/planner.hpp"
#include "anwm/rollout.hpp"
#include "anwm/scene.hpp"
#include "anwm/wm/model.hpp"
#include "anwm/wm/trainer.hpp"

namespace anwm {

struct DatasetOptions {
  int flights = 4;
  int flight_length = 96;  // actions per random walk
  int segment_length = 48;
  double test_fraction = 0.25;
  int views = 4;  // enriched mountings per segment, 1..4
  int width = 64;
  int height = 64;
  double hfov_deg = 90.0;

  Intrinsics intrinsics() const;
  void validate() const;
};

struct RolloutSettings {
  int context = 16;
  int horizon = 32;
  DepthPolicy depth_policy = DepthPolicy::Geom;
  bool stochastic = false;
};

struct PlannerSettings {
  int candidates = 5;
  int horizon = 32;
  double sigma_pos = 1.0;
  double sigma_yaw_deg = 5.0;
  double goal_bias = 1.0;
  double temperature = 1.0;
  std::string metric = "ssim";

  PlannerConfig to_config(std::uint64_t seed) const;
};

struct EvalSettings {
  std::vector<int> horizons{4, 8, 16, 32};
  double success_threshold = 20.0;
  int max_clips = 0;  // 0 = all
  int goal_index = 47;
  int ffp_target_index = 32;
  bool navigation = true;
};

/// Resolved settings of one invocation. File form: a JSON object with the
/// optional top-level keys seed, out, log_level and the sections scene,
/// dataset, model, train, rollout, planner, eval. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string log_level = "info";
  SceneConfig scene;
  DatasetOptions dataset;
  wm::ModelConfig model;
  wm::TrainConfig train;
  RolloutSettings rollout;
  PlannerSettings planner;
  EvalSettings eval;

  void validate() const;
};

/// Overlays the keys present in `text` onto `base`.
RunConfig run_config_from_json(const std::string& text, const RunConfig& base = {});
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});
std::string to_json(const RunConfig& c);

/// Writes resolved_config.json into `dir`.
void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& c);

/// Per-module seeds: derive_seed(global, label) for label in dataset, model-init, train, rollout, planner, eval.
std::uint64_t module_seed(const RunConfig& c, const char* label);

}  // namespace anwm
