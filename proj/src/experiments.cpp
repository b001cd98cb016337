#include "anwm/experiments.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "anwm/errors.hpp"
#include "anwm/ffp.hpp"
#include "anwm/log.hpp"
#include "anwm/metrics.hpp"

namespace anwm {

double ReportRow::at(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  throw InvalidArgument("report row " + label + " has no value " + key);
}

const ReportRow& MetricReport::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw InvalidArgument("report " + kind + " has no row " + label);
}

std::string reports_to_json(std::span<const MetricReport> reports) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["unavailable_metrics"] = kUnavailableMetrics;
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["kind"] = r.kind;
    j["meta"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.meta) j["meta"][k] = v;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
      nlohmann::ordered_json jr;
      jr["label"] = row.label;
      for (const auto& [k, v] : row.values) jr[k] = v;
      for (const auto& k : kUnavailableMetrics) jr[k] = nullptr;
      j["rows"].push_back(jr);
    }
    j["failures"] = r.failures;
    doc["reports"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

void write_reports(const std::filesystem::path& path, std::span<const MetricReport> reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write report " + path.string());
  f << reports_to_json(reports);
}

const Scene& SceneCache::get(std::uint64_t seed) {
  auto it = scenes_.find(seed);
  if (it == scenes_.end()) it = scenes_.emplace(seed, build_scene(seed, config_)).first;
  return it->second;
}

namespace {

std::vector<Observation> observations(const Clip& clip, int first, int count) {
  std::vector<Observation> obs;
  for (int i = first; i < first + count; ++i) obs.push_back({clip.frames[i], clip.poses[i]});
  return obs;
}

RolloutOptions rollout_options(const Clip& clip, const Scene& scene, DepthPolicy policy, std::uint64_t seed) {
  RolloutOptions o;
  o.depth_policy = policy;
  o.scene = &scene;
  o.intrinsics = clip.intrinsics;
  o.seed = seed;
  return o;
}

std::string clip_name(const Clip& clip, std::size_t index) {
  return "clip" + std::to_string(index) + "(scene " + std::to_string(clip.meta.scene_seed) + ", view " +
         std::to_string(clip.meta.view_offset) + ")";
}

}  // namespace

MetricReport run_generation_eval(const PredictorFactory& make, std::span<const Clip> clips, SceneCache& scenes,
                                 const GenerationEvalOptions& options) {
  if (options.context < 1) throw InvalidArgument("generation eval: context must be >= 1");
  if (options.horizons.empty()) throw InvalidArgument("generation eval: no horizons");
  for (int h : options.horizons)
    if (h < 1) throw InvalidArgument("generation eval: horizons must be >= 1");
  const int max_h = *std::max_element(options.horizons.begin(), options.horizons.end());

  MetricReport report;
  report.kind = "generation";
  report.meta = {{"context", std::to_string(options.context)},
                 {"depth_policy", to_string(options.depth_policy)},
                 {"seed", std::to_string(options.seed)}};
  const std::size_t nh = options.horizons.size();
  std::vector<ImageMetrics> sum(nh), base(nh);
  int used = 0;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const Clip& clip = clips[c];
    if (static_cast<int>(clip.frames.size()) < options.context + max_h) {
      report.failures.push_back(clip_name(clip, c) + ": " + std::to_string(clip.frames.size()) +
                                " frames, need " + std::to_string(options.context + max_h));
      continue;
    }
    try {
      const Scene& scene = scenes.get(clip.meta.scene_seed);
      auto predictor = make(scene, clip);
      const auto init = observations(clip, 0, options.context);
      const std::span<const Action4> actions(clip.actions.data() + options.context - 1, static_cast<std::size_t>(max_h));
      const auto frames = rollout_trajectory(*predictor, init, actions,
                                             rollout_options(clip, scene, options.depth_policy,
                                                             derive_seed(options.seed, static_cast<std::uint64_t>(c))));
      const FrameRGBD& last_real = clip.frames[options.context - 1];
      for (std::size_t i = 0; i < nh; ++i) {
        const int h = options.horizons[i];
        const FrameRGBD& gt = clip.frames[options.context - 1 + h];
        const auto m = image_metrics(frames[h - 1], gt);
        const auto b = image_metrics(last_real, gt);
        sum[i].mse += m.mse, sum[i].psnr += m.psnr, sum[i].ssim += m.ssim;
        base[i].mse += b.mse, base[i].psnr += b.psnr, base[i].ssim += b.ssim;
      }
      ++used;
    } catch (const std::exception& e) {
      report.failures.push_back(clip_name(clip, c) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < nh; ++i) {
    const double n = used > 0 ? used : 1;
    report.rows.push_back({"h" + std::to_string(options.horizons[i]),
                           {{"horizon", options.horizons[i]},
                            {"clips", used},
                            {"mse", sum[i].mse / n},
                            {"psnr", sum[i].psnr / n},
                            {"ssim", sum[i].ssim / n},
                            {"copy_last_mse", base[i].mse / n},
                            {"copy_last_psnr", base[i].psnr / n},
                            {"copy_last_ssim", base[i].ssim / n}}});
  }
  return report;
}

MetricReport run_navigation_eval(const PredictorFactory& make, std::span<const Clip> clips, SceneCache& scenes,
                                 const NavigationEvalOptions& options) {
  if (options.context < 1) throw InvalidArgument("navigation eval: context must be >= 1");
  const auto distance = image_distance(options.metric);
  MetricReport report;
  report.kind = "navigation";
  report.meta = {{"context", std::to_string(options.context)},
                 {"metric", options.metric},
                 {"candidates", std::to_string(options.planner.candidates)},
                 {"success_threshold", std::to_string(options.success_threshold)},
                 {"depth_policy", to_string(options.depth_policy)},
                 {"seed", std::to_string(options.seed)}};
  double s_ate = 0, s_rpe = 0, s_yaw = 0, s_ne = 0, s_sr = 0;
  int used = 0;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const Clip& clip = clips[c];
    const int n = static_cast<int>(clip.frames.size());
    const int goal = options.goal_index < 0 ? n - 1 : options.goal_index;
    const int start = options.context - 1;
    if (goal >= n || goal <= start) {
      report.failures.push_back(clip_name(clip, c) + ": goal index " + std::to_string(goal) + " out of range");
      continue;
    }
    try {
      const Scene& scene = scenes.get(clip.meta.scene_seed);
      auto predictor = make(scene, clip);
      PlannerConfig pc = options.planner;
      pc.horizon = goal - start;
      pc.seed = derive_seed(derive_seed(options.seed, "planner"), static_cast<std::uint64_t>(c));
      const Pose4& s = clip.poses[start];
      const Eigen::Vector3d hint = clip.poses[goal].position() - s.position();
      const auto cands = sample_candidates(s, pc, hint);
      const auto init = observations(clip, 0, options.context);
      const auto ranking =
          rank_candidates(*predictor, init, cands, clip.frames[goal], distance,
                          rollout_options(clip, scene, options.depth_policy,
                                          derive_seed(options.seed, static_cast<std::uint64_t>(c))));
      const auto& est = cands[ranking.selected].waypoints;
      const std::span<const Pose4> gt(clip.poses.data() + start, est.size());
      const double a = ate(est, gt), r = rpe(est, gt), y = rpe_yaw(est, gt);
      const auto nav = nav_outcome(est.back(), clip.poses[goal], options.success_threshold);
      report.rows.push_back({clip_name(clip, c),
                             {{"selected", static_cast<double>(ranking.selected)},
                              {"ate", a},
                              {"rpe", r},
                              {"rpe_yaw", y},
                              {"ne", nav.ne},
                              {"success", nav.success ? 1.0 : 0.0}}});
      s_ate += a, s_rpe += r, s_yaw += y, s_ne += nav.ne, s_sr += nav.success ? 1 : 0;
      ++used;
    } catch (const std::exception& e) {
      report.failures.push_back(clip_name(clip, c) + ": " + e.what());
    }
  }
  const double k = used > 0 ? used : 1;
  report.rows.push_back({"mean",
                         {{"episodes", used},
                          {"ate", s_ate / k},
                          {"rpe", s_rpe / k},
                          {"rpe_yaw", s_yaw / k},
                          {"ne", s_ne / k},
                          {"sr", s_sr / k}}});
  return report;
}

MetricReport run_ffp_context_ablation(std::span<const Clip> clips, std::span<const int> counts, int target_index) {
  if (counts.empty()) throw InvalidArgument("ffp-context ablation: empty grid");
  for (int c : counts)
    if (c < 1) throw InvalidArgument("ffp-context ablation: counts must be >= 1");
  MetricReport report;
  report.kind = "ablation:ffp-context";
  report.meta = {{"target_index", std::to_string(target_index)}};
  const std::size_t nc = counts.size();
  std::vector<double> m(nc), p(nc), s(nc), holes(nc);
  int used = 0;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    const Clip& clip = clips[c];
    const int max_count = *std::max_element(counts.begin(), counts.end());
    if (target_index < max_count || target_index >= static_cast<int>(clip.frames.size())) {
      report.failures.push_back(clip_name(clip, c) + ": target index out of range");
      continue;
    }
    const auto obs = observations(clip, 0, target_index);
    const FrameRGBD& gt = clip.frames[target_index];
    for (std::size_t i = 0; i < nc; ++i) {
      const auto prior = future_frame_projection(obs, clip.poses[target_index], clip.intrinsics,
                                                 static_cast<std::size_t>(counts[i]));
      const auto im = image_metrics(prior, gt);
      m[i] += im.mse, p[i] += im.psnr, s[i] += im.ssim, holes[i] += prior.hole_fraction();
    }
    ++used;
  }
  const double k = used > 0 ? used : 1;
  for (std::size_t i = 0; i < nc; ++i)
    report.rows.push_back({"count=" + std::to_string(counts[i]),
                           {{"count", counts[i]},
                            {"clips", used},
                            {"mse", m[i] / k},
                            {"psnr", p[i] / k},
                            {"ssim", s[i] / k},
                            {"hole_fraction", holes[i] / k}}});
  return report;
}

std::unique_ptr<wm::WorldModel<float>> train_model(const wm::ModelConfig& config, const wm::TrainConfig& train,
                                                  std::span<const Clip> clips, std::uint64_t init_seed,
                                                  const std::function<void(int, double)>& on_step) {
  auto model = std::make_unique<wm::WorldModel<float>>(config, init_seed);
  std::vector<std::pair<std::size_t, int>> index;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    clips[c].validate();
    if (clips[c].intrinsics.width != config.frame_width || clips[c].intrinsics.height != config.frame_height)
      throw InvalidArgument("training clip frame size does not match the model config");
    for (int t = config.context; t < static_cast<int>(clips[c].frames.size()); ++t) index.emplace_back(c, t);
  }
  if (index.empty()) throw InvalidArgument("no training windows: clips are shorter than the context");
  wm::Trainer<float> trainer(*model, train);
  Rng rng(derive_seed(train.seed, "train"));
  std::vector<wm::EncodedWindow<float>> batch;
  for (int s = 0; s < train.steps; ++s) {
    batch.clear();
    for (int b = 0; b < train.batch_size; ++b) {
      const auto& [c, t] = index[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(index.size()) - 1))];
      const auto w = wm::make_windows(clips[c], config, t, t);
      auto enc = wm::encode_windows(*model, std::span(w));
      batch.push_back(std::move(enc.front()));
    }
    const double loss = trainer.train_step(batch, rng);
    if (on_step) on_step(s, loss);
  }
  return model;
}

namespace {

void append_generation(ReportRow& row, const MetricReport& gen) {
  for (const auto& r : gen.rows) {
    const std::string h = "@" + std::to_string(static_cast<int>(r.at("horizon")));
    row.values.emplace_back("mse" + h, r.at("mse"));
    row.values.emplace_back("psnr" + h, r.at("psnr"));
    row.values.emplace_back("ssim" + h, r.at("ssim"));
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(what + ": not an integer: " + s);
  }
}

}  // namespace

MetricReport run_ablation(const std::string& kind, std::span<const std::string> grid, AblationSetup& setup,
                          SceneCache& scenes) {
  if (grid.empty()) throw InvalidArgument("ablation: empty grid");
  auto note = [&](const std::string& m) {
    if (setup.progress) setup.progress(m);
  };
  if (kind == "ffp-context") {
    std::vector<int> counts;
    for (const auto& g : grid) counts.push_back(parse_int(g, "ffp-context grid"));
    auto r = run_ffp_context_ablation(setup.test, counts, setup.ffp_target_index);
    r.meta.emplace_back("seed", std::to_string(setup.seed));
    return r;
  }
  if (kind != "gen-context" && kind != "modulation")
    throw InvalidArgument("ablation kind must be ffp-context, gen-context or modulation, got " + kind);

  MetricReport report;
  report.kind = "ablation:" + kind;
  report.meta = {{"seed", std::to_string(setup.seed)},
                 {"train_steps", std::to_string(setup.train_config.steps)},
                 {"train_clips", std::to_string(setup.train.size())},
                 {"test_clips", std::to_string(setup.test.size())}};
  for (const auto& g : grid) {
    wm::ModelConfig mc = setup.model;
    std::string label;
    if (kind == "gen-context") {
      mc.context = parse_int(g, "gen-context grid");
      mc.ffp_context = 1;
      label = "m=" + g;
    } else if (g == "uniform") {
      mc.modulation = wm::Modulation::Uniform;
      label = g;
    } else if (g == "independent") {
      mc.modulation = wm::Modulation::Independent;
      label = g;
    } else {
      throw InvalidArgument("modulation grid entries must be uniform or independent, got " + g);
    }
    mc.validate();
    note("training " + label);
    const auto model = train_model(mc, setup.train_config, setup.train, derive_seed(setup.seed, "model-init"));
    note("evaluating " + label);
    const PredictorFactory make = [&](const Scene&, const Clip& clip) -> std::unique_ptr<FramePredictor> {
      return std::make_unique<DiffusionPredictor>(*model, clip.intrinsics);
    };
    GenerationEvalOptions eo = setup.eval;
    eo.seed = derive_seed(setup.seed, "eval");
    const auto gen = run_generation_eval(make, setup.test, scenes, eo);
    ReportRow row{label, {}};
    if (kind == "gen-context") row.values.emplace_back("context", mc.context);
    append_generation(row, gen);
    report.rows.push_back(std::move(row));
    for (const auto& f : gen.failures) report.failures.push_back(label + ": " + f);
  }
  return report;
}

}  // namespace anwm
