#include "anwm/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "anwm/dataset.hpp"
#include "anwm/errors.hpp"
#include "anwm/experiments.hpp"
#include "anwm/ffp.hpp"
#include "anwm/image_io.hpp"
#include "anwm/log.hpp"
#include "anwm/metrics.hpp"
#include "anwm/planner.hpp"
#include "anwm/rollout.hpp"
#include "anwm/run_config.hpp"
#include "anwm/scene.hpp"
#include "anwm/wm/checkpoint.hpp"

namespace fs = std::filesystem;

namespace anwm {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values; unset optionals keep the config-file (or default) value.
struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> log_level;
  std::string data, ckpt, clip, report, kind, grid, goal_image, start, goal_hint;
  std::optional<int> steps, context, horizon, candidates, flights, flight_length, segment_length, views, width, height,
      target, count, max_clips, batch_size;
  std::optional<double> lr;
  std::optional<std::string> depth_policy, metric;
  std::optional<std::uint64_t> scene_seed;
  bool oracle = false, no_navigation = false, stochastic = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file (defaults < file < flags)");
  cmd->add_option("--seed", f.seed, "Global seed");
  cmd->add_option("--log-level", f.log_level, "debug|info|warn|error");
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_run_config(f.config, c);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.log_level) c.log_level = *f.log_level;
  if (f.steps) c.train.steps = *f.steps;
  if (f.lr) c.train.learning_rate = *f.lr;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.context) c.rollout.context = *f.context;
  if (f.horizon) c.rollout.horizon = c.planner.horizon = *f.horizon;
  if (f.depth_policy) c.rollout.depth_policy = parse_depth_policy(*f.depth_policy);
  if (f.stochastic) c.rollout.stochastic = true;
  if (f.candidates) c.planner.candidates = *f.candidates;
  if (f.metric) c.planner.metric = *f.metric;
  if (f.flights) c.dataset.flights = *f.flights;
  if (f.flight_length) c.dataset.flight_length = *f.flight_length;
  if (f.segment_length) c.dataset.segment_length = *f.segment_length;
  if (f.views) c.dataset.views = *f.views;
  if (f.width) c.dataset.width = *f.width;
  if (f.height) c.dataset.height = *f.height;
  if (f.max_clips) c.eval.max_clips = *f.max_clips;
  if (f.no_navigation) c.eval.navigation = false;
  c.validate();
  const auto lvl = c.log_level == "debug" ? log::Level::Debug
                   : c.log_level == "warn" ? log::Level::Warn
                   : c.log_level == "error" ? log::Level::Error
                                            : log::Level::Info;
  log::set_level(lvl);
  return c;
}

std::vector<double> parse_doubles(const std::string& s, std::size_t n, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": not a number: " + tok);
    }
  }
  if (v.size() != n) throw UsageError(std::string(flag) + ": expected " + std::to_string(n) + " comma-separated values");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw InvalidArgument("cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw InvalidArgument("cannot write " + p.string());
  f << text;
}

fs::path parent_dir(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

// Scene config recorded by gen-dataset in the dataset root above `path`.
SceneConfig dataset_scene_config(const fs::path& path, const SceneConfig& fallback) {
  for (fs::path p = fs::absolute(path); !p.empty(); p = p.parent_path()) {
    if (fs::exists(p / "dataset.json")) {
      const auto j = nlohmann::json::parse(slurp(p / "dataset.json"));
      return scene_config_from_json(j.at("scene").dump());
    }
    if (p == p.parent_path()) break;
  }
  return fallback;
}

// Clips under `data` tagged `split`; all clips when none carry the tag.
std::vector<Clip> load_split(const fs::path& data, const std::string& split, int max_clips) {
  const auto dirs = list_clips(data);
  if (dirs.empty()) throw InvalidArgument("no clips found under " + data.string());
  std::vector<Clip> all, tagged;
  for (const auto& d : dirs) {
    auto c = read_clip(d);
    if (c.meta.split == split) tagged.push_back(c);
    all.push_back(std::move(c));
  }
  auto& chosen = tagged.empty() ? all : tagged;
  if (tagged.empty()) log::warn("no clips tagged '" + split + "', using all " + std::to_string(all.size()));
  if (max_clips > 0 && static_cast<int>(chosen.size()) > max_clips) chosen.resize(static_cast<std::size_t>(max_clips));
  return std::move(chosen);
}

// --------------------------------------------------------------------------

int cmd_gen_scene(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path out = c.out;
  fs::create_directories(out);
  const Scene scene = build_scene(c.seed, c.scene);
  write_text(out / "scene.json", scene_to_json(scene));
  Rng rng(derive_seed(c.seed, "preview"));
  const Pose4 pose = sample_free_pose(scene, rng, 2.0, 10.0, 40.0);
  const auto k = c.dataset.intrinsics();
  const auto frame = render(scene, pose, k);
  write_png(out / "preview.png", rgb_image(frame));
  write_config_snapshot(out, c);
  log::info("scene with " + std::to_string(scene.boxes.size()) + " boxes written to " + out.string());
  return 0;
}

int cmd_gen_dataset(const Flags& f) {
  const RunConfig c = resolve(f);
  const auto& d = c.dataset;
  const fs::path out = c.out;
  fs::create_directories(out / "clips");
  const std::uint64_t ds_seed = module_seed(c, "dataset");
  const int n_test = static_cast<int>(std::ceil(d.flights * d.test_fraction - 1e-9));
  int written = 0;
  for (int fl = 0; fl < d.flights; ++fl) {
    const std::uint64_t scene_seed = derive_seed(ds_seed, static_cast<std::uint64_t>(fl));
    const Scene scene = build_scene(scene_seed, c.scene);
    Rng rng(derive_seed(scene_seed, "flight"));
    std::optional<Clip> flight;
    for (int attempt = 0; attempt < 20 && !flight; ++attempt) {
      TrajectorySpec spec;
      spec.start = sample_free_pose(scene, rng, spec.clearance, 10.0, 40.0);
      spec.seed = derive_seed(scene_seed, static_cast<std::uint64_t>(attempt));
      spec.length = d.flight_length;
      spec.intrinsics = d.intrinsics();
      try {
        flight = generate_trajectory(scene, spec);
      } catch (const GenerationStuck& e) {
        log::debug(std::string("flight retry: ") + e.what());
      }
    }
    if (!flight) throw GenerationStuck("flight " + std::to_string(fl) + ": no feasible random walk after 20 starts");
    const std::string split = fl >= d.flights - n_test ? "test" : "train";
    const auto segments = partition_segments(*flight, d.segment_length, rng);
    for (std::size_t s = 0; s < segments.size(); ++s) {
      auto views = enrich_views(segments[s], scene);
      for (int v = 0; v < d.views; ++v) {
        views[v].meta.split = split;
        char name[64];
        std::snprintf(name, sizeof name, "f%03d_s%02zu_v%d", fl, s, v);
        write_clip(views[v], out / "clips" / name);
        ++written;
      }
    }
  }
  nlohmann::ordered_json meta;
  meta["scene"] = nlohmann::ordered_json::parse(scene_config_to_json(c.scene));
  meta["clips"] = written;
  meta["test_flights"] = n_test;
  write_text(out / "dataset.json", meta.dump(2) + "\n");
  write_config_snapshot(out, c);
  log::info(std::to_string(written) + " clips written to " + out.string());
  return 0;
}

int cmd_train(const Flags& f) {
  RunConfig c = resolve(f);
  const fs::path ckpt = c.out;
  auto clips = load_split(f.data, "train", 0);
  c.model.frame_width = clips.front().intrinsics.width;
  c.model.frame_height = clips.front().intrinsics.height;
  c.model.validate();
  c.train.seed = module_seed(c, "train");
  const int every = std::max(1, c.train.steps / 20);
  auto model = train_model(c.model, c.train, clips, module_seed(c, "model-init"), [&](int s, double loss) {
    if ((s + 1) % every == 0 || s == 0) log::info("step " + std::to_string(s + 1) + " loss " + std::to_string(loss));
  });
  wm::save_checkpoint(ckpt, *model, c.train, c.train.steps);
  write_config_snapshot(parent_dir(ckpt), c);
  log::info("checkpoint written to " + ckpt.string());
  return 0;
}

int cmd_rollout(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path out = c.out;
  auto ck = wm::load_checkpoint(f.ckpt);
  const Clip clip = read_clip(f.clip);
  const int ctx = c.rollout.context, hz = c.rollout.horizon;
  if (static_cast<int>(clip.frames.size()) < ctx + hz)
    throw InvalidArgument("clip has " + std::to_string(clip.frames.size()) + " frames, need context + horizon = " +
                          std::to_string(ctx + hz));
  const Scene scene = build_scene(clip.meta.scene_seed, dataset_scene_config(f.clip, c.scene));
  DiffusionPredictor predictor(*ck.model, clip.intrinsics, c.rollout.stochastic);
  std::vector<Observation> init;
  for (int i = 0; i < ctx; ++i) init.push_back({clip.frames[i], clip.poses[i]});
  RolloutOptions opt;
  opt.depth_policy = c.rollout.depth_policy;
  opt.scene = &scene;
  opt.intrinsics = clip.intrinsics;
  opt.seed = module_seed(c, "rollout");
  const std::span<const Action4> actions(clip.actions.data() + ctx - 1, static_cast<std::size_t>(hz));
  const auto frames = rollout_trajectory(predictor, init, actions, opt);

  fs::create_directories(out / "pred");
  std::vector<Image8> tiles;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (int i = 0; i < hz; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04d.png", i + 1);
    write_png(out / "pred" / name, rgb_image(frames[i]));
    const auto& gt = clip.frames[ctx + i];
    const auto m = image_metrics(frames[i], gt);
    steps.push_back({{"horizon", i + 1}, {"mse", m.mse}, {"psnr", m.psnr}, {"ssim", m.ssim}});
  }
  for (int i = 0; i < hz; ++i) tiles.push_back(rgb_image(clip.frames[ctx + i]));
  for (int i = 0; i < hz; ++i) tiles.push_back(rgb_image(frames[i]));
  write_png(out / "contact_sheet.png", contact_sheet(tiles, hz));
  nlohmann::ordered_json j;
  j["clip"] = f.clip;
  j["context"] = ctx;
  j["depth_policy"] = to_string(c.rollout.depth_policy);
  j["steps"] = steps;
  write_text(out / "rollout.json", j.dump(2) + "\n");
  write_config_snapshot(out, c);
  log::info("rollout written to " + out.string());
  return 0;
}

int cmd_ffp(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path out = c.out;
  const Clip clip = read_clip(f.clip);
  const int n = static_cast<int>(clip.frames.size());
  const int target = f.target.value_or(n - 1);
  const int count = f.count.value_or(target);
  if (target < 1 || target >= n) throw InvalidArgument("--target must be in [1, " + std::to_string(n - 1) + "]");
  if (count < 1 || count > target) throw InvalidArgument("--count must be in [1, target]");
  std::vector<Observation> obs;
  for (int i = target - count; i < target; ++i) obs.push_back({clip.frames[i], clip.poses[i]});
  const auto prior = future_frame_projection(obs, clip.poses[target], clip.intrinsics);
  fs::create_directories(out);
  write_png(out / "projected.png", rgb_image(prior));
  write_png(out / "valid.png", mask_image(prior.valid));
  write_png(out / "target.png", rgb_image(clip.frames[target]));
  write_depth_raw(out / "depth.raw", prior.depth);
  const auto m = image_metrics(prior, clip.frames[target]);
  nlohmann::ordered_json j = {{"target", target},   {"count", count},         {"mse", m.mse},
                              {"psnr", m.psnr},     {"ssim", m.ssim},         {"hole_fraction", prior.hole_fraction()}};
  write_text(out / "ffp.json", j.dump(2) + "\n");
  write_config_snapshot(out, c);
  return 0;
}

int cmd_plan(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path report = f.report.empty() ? fs::path(c.out) / "plan.json" : fs::path(f.report);
  const auto s = parse_doubles(f.start, 4, "--start");
  const Pose4 start(s[0], s[1], s[2], s[3] * kPi / 180.0);
  const Scene scene = build_scene(f.scene_seed.value_or(0), c.scene);
  if (scene.collides(start.position())) throw InvalidArgument("--start collides with the scene");

  std::unique_ptr<wm::WorldModel<float>> model;
  std::unique_ptr<FramePredictor> predictor;
  Intrinsics k = c.dataset.intrinsics();
  if (f.oracle) {
    predictor = std::make_unique<RendererPredictor>(scene, k);
  } else {
    auto ck = wm::load_checkpoint(f.ckpt);
    model = std::move(ck.model);
    k = Intrinsics::from_fov(model->config().frame_width, model->config().frame_height,
                             c.dataset.hfov_deg * kPi / 180.0);
    predictor = std::make_unique<DiffusionPredictor>(*model, k, c.rollout.stochastic);
  }
  FrameRGBD goal = FrameRGBD::blank(k.width, k.height);
  const auto img = read_png(f.goal_image);
  if (img.width != k.width || img.height != k.height)
    throw InvalidArgument("goal image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          ", expected " + std::to_string(k.width) + "x" + std::to_string(k.height));
  set_rgb(goal, img);

  std::optional<Eigen::Vector3d> hint;
  if (!f.goal_hint.empty()) {
    const auto h = parse_doubles(f.goal_hint, 3, "--goal-hint");
    hint = Eigen::Vector3d(h[0], h[1], h[2]);
  }
  const auto pc = c.planner.to_config(module_seed(c, "planner"));
  const auto cands = sample_candidates(start, pc, hint);
  const std::vector<Observation> init{{render(scene, start, k), start}};
  RolloutOptions opt;
  opt.depth_policy = c.rollout.depth_policy;
  opt.scene = &scene;
  opt.intrinsics = k;
  opt.seed = module_seed(c, "rollout");
  const auto r = rank_candidates(*predictor, init, cands, goal, image_distance(c.planner.metric), opt);

  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["metric"] = c.planner.metric;
  j["selected"] = r.selected;
  j["order"] = r.order;
  j["candidates"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    nlohmann::ordered_json cj;
    cj["index"] = i;
    cj["score"] = r.failed[i] ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.scores[i]);
    cj["failed"] = static_cast<bool>(r.failed[i]);
    cj["actions"] = nlohmann::ordered_json::array();
    for (const auto& a : cands[i].actions) cj["actions"].push_back({a.dx, a.dy, a.dz, a.dyaw});
    cj["waypoints"] = nlohmann::ordered_json::array();
    for (const auto& w : cands[i].waypoints) cj["waypoints"].push_back({w.x, w.y, w.z, w.yaw});
    j["candidates"].push_back(cj);
  }
  write_text(report, j.dump(2) + "\n");
  write_config_snapshot(parent_dir(report), c);
  log::info("selected candidate " + std::to_string(r.selected));
  return 0;
}

int cmd_eval(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path report = f.report;
  auto clips = load_split(f.data, "test", c.eval.max_clips);
  SceneCache scenes(dataset_scene_config(f.data, c.scene));
  std::unique_ptr<wm::WorldModel<float>> model;
  if (!f.oracle) model = std::move(wm::load_checkpoint(f.ckpt).model);
  const bool stochastic = c.rollout.stochastic;
  const PredictorFactory make = [&](const Scene& scene, const Clip& clip) -> std::unique_ptr<FramePredictor> {
    if (!model) return std::make_unique<RendererPredictor>(scene, clip.intrinsics);
    return std::make_unique<DiffusionPredictor>(*model, clip.intrinsics, stochastic);
  };
  std::vector<MetricReport> reports;
  GenerationEvalOptions go;
  go.context = c.rollout.context;
  go.horizons = c.eval.horizons;
  go.depth_policy = c.rollout.depth_policy;
  go.seed = module_seed(c, "eval");
  reports.push_back(run_generation_eval(make, clips, scenes, go));
  if (c.eval.navigation) {
    NavigationEvalOptions no;
    no.context = c.rollout.context;
    no.goal_index = c.eval.goal_index;
    no.planner = c.planner.to_config(module_seed(c, "planner"));
    no.metric = c.planner.metric;
    no.success_threshold = c.eval.success_threshold;
    no.depth_policy = c.rollout.depth_policy;
    no.seed = module_seed(c, "eval");
    reports.push_back(run_navigation_eval(make, clips, scenes, no));
  }
  for (auto& r : reports) r.meta.emplace_back("model", f.oracle ? "renderer" : f.ckpt);
  write_reports(report, reports);
  write_config_snapshot(parent_dir(report), c);
  log::info("report written to " + report.string());
  return 0;
}

int cmd_ablate(const Flags& f) {
  const RunConfig c = resolve(f);
  const fs::path report = f.report;
  const auto grid = split_list(f.grid);
  if (grid.empty()) throw UsageError("--grid must list at least one value");
  AblationSetup setup;
  setup.test = load_split(f.data, "test", c.eval.max_clips);
  if (f.kind != "ffp-context") setup.train = load_split(f.data, "train", 0);
  setup.model = c.model;
  setup.model.frame_width = setup.test.front().intrinsics.width;
  setup.model.frame_height = setup.test.front().intrinsics.height;
  setup.train_config = c.train;
  setup.train_config.seed = module_seed(c, "train");
  setup.eval.context = c.rollout.context;
  setup.eval.horizons = c.eval.horizons;
  setup.eval.depth_policy = c.rollout.depth_policy;
  setup.seed = c.seed;
  setup.ffp_target_index = c.eval.ffp_target_index;
  setup.progress = [](const std::string& m) { log::info(m); };
  SceneCache scenes(dataset_scene_config(f.data, c.scene));
  const std::vector<MetricReport> reports{run_ablation(f.kind, grid, setup, scenes)};
  write_reports(report, reports);
  write_config_snapshot(parent_dir(report), c);
  log::info("report written to " + report.string());
  return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"anwm: aerial navigation world model toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Flags f;

  auto* gs = app.add_subcommand("gen-scene", "Generate a procedural scene and a preview render");
  add_common(gs, f);
  gs->add_option("--out", f.out, "Output directory")->required();

  auto* gd = app.add_subcommand("gen-dataset", "Render random-walk flights into enriched clips");
  add_common(gd, f);
  gd->add_option("--out", f.out, "Dataset directory")->required();
  gd->add_option("--flights", f.flights, "Number of flights (one scene each)");
  gd->add_option("--flight-length", f.flight_length, "Actions per flight");
  gd->add_option("--segment-length", f.segment_length, "Actions per clip");
  gd->add_option("--views", f.views, "Camera mountings per segment (1..4)");
  gd->add_option("--width", f.width, "Frame width");
  gd->add_option("--height", f.height, "Frame height");

  auto* tr = app.add_subcommand("train", "Train the world model");
  add_common(tr, f);
  tr->add_option("--data", f.data, "Dataset directory")->required();
  tr->add_option("--out", f.out, "Checkpoint path")->required();
  tr->add_option("--steps", f.steps, "Optimizer steps");
  tr->add_option("--lr", f.lr, "Learning rate");
  tr->add_option("--batch-size", f.batch_size, "Windows per step");

  auto* ro = app.add_subcommand("rollout", "Autoregressive generation along a clip's actions");
  add_common(ro, f);
  ro->add_option("--ckpt", f.ckpt, "Checkpoint")->required();
  ro->add_option("--clip", f.clip, "Clip directory")->required();
  ro->add_option("--out", f.out, "Output directory")->required();
  ro->add_option("--context", f.context, "Real context frames");
  ro->add_option("--horizon", f.horizon, "Frames to generate");
  ro->add_option("--depth-policy", f.depth_policy, "geom|carry");
  ro->add_flag("--stochastic", f.stochastic, "Ancestral sampler instead of deterministic DDIM");

  auto* fp = app.add_subcommand("ffp", "Project past frames of a clip into a target view");
  add_common(fp, f);
  fp->add_option("--clip", f.clip, "Clip directory")->required();
  fp->add_option("--out", f.out, "Output directory")->required();
  fp->add_option("--target", f.target, "Target frame index (default last)");
  fp->add_option("--count", f.count, "Past frames to fuse (default all)");

  auto* pl = app.add_subcommand("plan", "Rank candidate trajectories toward a goal image");
  add_common(pl, f);
  pl->add_option("--ckpt", f.ckpt, "Checkpoint (omit with --oracle)");
  pl->add_flag("--oracle", f.oracle, "Use the renderer as the world model");
  pl->add_option("--scene-seed", f.scene_seed, "Scene seed")->required();
  pl->add_option("--start", f.start, "Start pose x,y,z,yaw_deg")->required();
  pl->add_option("--goal-image", f.goal_image, "Goal PNG")->required();
  pl->add_option("--goal-hint", f.goal_hint, "Goal direction dx,dy,dz (world frame)");
  pl->add_option("--candidates", f.candidates, "Candidate count");
  pl->add_option("--horizon", f.horizon, "Steps per candidate");
  pl->add_option("--metric", f.metric, "mse|ssim");
  pl->add_option("--depth-policy", f.depth_policy, "geom|carry");
  pl->add_option("--out", f.report, "Report path")->required();

  auto* ev = app.add_subcommand("eval", "Generation and navigation metrics on test clips");
  add_common(ev, f);
  ev->add_option("--ckpt", f.ckpt, "Checkpoint");
  ev->add_flag("--oracle", f.oracle, "Use the renderer as the world model");
  ev->add_option("--data", f.data, "Dataset directory")->required();
  ev->add_option("--report", f.report, "Report path")->required();
  ev->add_option("--context", f.context, "Real context frames");
  ev->add_option("--depth-policy", f.depth_policy, "geom|carry");
  ev->add_option("--candidates", f.candidates, "Planner candidates");
  ev->add_option("--metric", f.metric, "Planner distance mse|ssim");
  ev->add_option("--max-clips", f.max_clips, "Evaluate at most this many clips");
  ev->add_flag("--no-navigation", f.no_navigation, "Skip the planning episodes");

  auto* ab = app.add_subcommand("ablate", "Run an ablation sweep");
  add_common(ab, f);
  ab->add_option("--kind", f.kind, "ffp-context|gen-context|modulation")
      ->required()
      ->check(CLI::IsMember({"ffp-context", "gen-context", "modulation"}));
  ab->add_option("--grid", f.grid, "Comma-separated grid values")->required();
  ab->add_option("--data", f.data, "Dataset directory")->required();
  ab->add_option("--report", f.report, "Report path")->required();
  ab->add_option("--steps", f.steps, "Training steps per grid point");
  ab->add_option("--max-clips", f.max_clips, "Evaluate at most this many clips");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ev && !f.oracle && f.ckpt.empty()) throw UsageError("eval: --ckpt is required (or pass --oracle)");
    if (*pl && !f.oracle && f.ckpt.empty()) throw UsageError("plan: --ckpt is required (or pass --oracle)");
    if (*gs) return cmd_gen_scene(f);
    if (*gd) return cmd_gen_dataset(f);
    if (*tr) return cmd_train(f);
    if (*ro) return cmd_rollout(f);
    if (*fp) return cmd_ffp(f);
    if (*pl) return cmd_plan(f);
    if (*ev) return cmd_eval(f);
    if (*ab) return cmd_ablate(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace anwm
