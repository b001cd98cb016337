#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anwm/dataset.hpp"
#include "anwm/planner.hpp"
#include "anwm/rollout.hpp"
#include "anwm/wm/model.hpp"
#include "anwm/wm/trainer.hpp"

namespace anwm {

inline constexpr int kReportSchemaVersion = 1;

/// Metrics that need pretrained networks; reports carry them as null.
inline const std::vector<std::string> kUnavailableMetrics = {"lpips", "dreamsim", "fid"};

struct ReportRow {
  std::string label;
  std::vector<std::pair<std::string, double>> values;

  double at(const std::string& key) const;
};

struct MetricReport {
  std::string kind;
  std::vector<ReportRow> rows;
  std::vector<std::string> failures;
  std::vector<std::pair<std::string, std::string>> meta;

  const ReportRow& row(const std::string& label) const;
};

/// {"schema_version", "reports": [...]}; byte-stable for equal inputs.
std::string reports_to_json(std::span<const MetricReport> reports);
void write_reports(const std::filesystem::path& path, std::span<const MetricReport> reports);

/// Scenes rebuilt from clip metadata, built once per seed.
class SceneCache {
 public:
  explicit SceneCache(SceneConfig config = {}) : config_(std::move(config)) {}
  const Scene& get(std::uint64_t seed);
  const SceneConfig& config() const { return config_; }

 private:
  SceneConfig config_;
  std::map<std::uint64_t, Scene> scenes_;
};

using PredictorFactory = std::function<std::unique_ptr<FramePredictor>(const Scene&, const Clip&)>;

struct GenerationEvalOptions {
  int context = 16;
  std::vector<int> horizons{4, 8, 16, 32};
  DepthPolicy depth_policy = DepthPolicy::Geom;
  std::uint64_t seed = 0;
};

/// Per horizon h: mean mse/psnr/ssim of the h-th predicted frame after
/// `context` real frames, plus the copy-last-frame baseline. Clips too short
/// for the longest horizon are listed under failures.
MetricReport run_generation_eval(const PredictorFactory& make, std::span<const Clip> clips, SceneCache& scenes,
                                 const GenerationEvalOptions& options);

struct NavigationEvalOptions {
  int context = 16;
  int goal_index = 47;  // < 0: last frame
  PlannerConfig planner;
  std::string metric = "ssim";
  double success_threshold = 20.0;
  DepthPolicy depth_policy = DepthPolicy::Geom;
  std::uint64_t seed = 0;
};

/// Plans from pose[context - 1] toward the goal frame with the start-to-goal
/// direction as hint; one row per clip and a "mean" row with ate, rpe,
/// rpe_yaw, ne and sr.
MetricReport run_navigation_eval(const PredictorFactory& make, std::span<const Clip> clips, SceneCache& scenes,
                                 const NavigationEvalOptions& options);

/// Fused-prior quality for each context count: the last `count` frames before
/// `target_index` are projected to the target pose (holes filled with 0).
MetricReport run_ffp_context_ablation(std::span<const Clip> clips, std::span<const int> counts, int target_index);

/// Trains on every window of `clips`, building windows on demand.
std::unique_ptr<wm::WorldModel<float>> train_model(const wm::ModelConfig& model, const wm::TrainConfig& train,
                                                  std::span<const Clip> clips, std::uint64_t init_seed,
                                                  const std::function<void(int, double)>& on_step = {});

struct AblationSetup {
  std::vector<Clip> train;
  std::vector<Clip> test;
  wm::ModelConfig model;
  wm::TrainConfig train_config;
  GenerationEvalOptions eval;
  std::uint64_t seed = 0;
  int ffp_target_index = 32;
  std::function<void(const std::string&)> progress;
};

/// kind: ffp-context | gen-context | modulation. One row per grid point.
MetricReport run_ablation(const std::string& kind, std::span<const std::string> grid, AblationSetup& setup,
                          SceneCache& scenes);

}  // namespace anwm
