#include "anwm/run_config.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "anwm/errors.hpp"

namespace anwm {

using nlohmann::json;

Intrinsics DatasetOptions::intrinsics() const { return Intrinsics::from_fov(width, height, hfov_deg * kPi / 180.0); }

void DatasetOptions::validate() const {
  if (flights < 1) throw InvalidArgument("dataset.flights must be >= 1");
  if (segment_length < 1 || flight_length < segment_length)
    throw InvalidArgument("dataset: need 1 <= segment_length <= flight_length");
  if (!(test_fraction >= 0 && test_fraction <= 1)) throw InvalidArgument("dataset.test_fraction must be in [0, 1]");
  if (views < 1 || views > 4) throw InvalidArgument("dataset.views must be in 1..4");
  if (width < 1 || height < 1) throw InvalidArgument("dataset frame size must be positive");
  if (!(hfov_deg > 0 && hfov_deg < 180)) throw InvalidArgument("dataset.hfov_deg must be in (0, 180)");
}

PlannerConfig PlannerSettings::to_config(std::uint64_t seed) const {
  PlannerConfig p;
  p.candidates = candidates;
  p.horizon = horizon;
  p.sigma_pos = sigma_pos;
  p.sigma_yaw = sigma_yaw_deg * kPi / 180.0;
  p.goal_bias = goal_bias;
  p.temperature = temperature;
  p.seed = seed;
  return p;
}

void RunConfig::validate() const {
  dataset.validate();
  model.validate();
  train.validate();
  if (rollout.context < 1 || rollout.horizon < 1) throw InvalidArgument("rollout.context and horizon must be >= 1");
  planner.to_config(0).validate();
  image_distance(planner.metric);
  if (eval.horizons.empty()) throw InvalidArgument("eval.horizons must not be empty");
  for (int h : eval.horizons)
    if (h < 1) throw InvalidArgument("eval.horizons must be >= 1");
  if (!(eval.success_threshold > 0)) throw InvalidArgument("eval.success_threshold must be positive");
  if (log_level != "debug" && log_level != "info" && log_level != "warn" && log_level != "error")
    throw InvalidArgument("log_level must be debug, info, warn or error");
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw InvalidArgument("config section " + section + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw InvalidArgument("config: unknown key " + section + "." + k);
  }
}

}  // namespace

RunConfig run_config_from_json(const std::string& text, const RunConfig& base) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  RunConfig c = base;
  try {
    check_keys(j, "<root>",
               {"seed", "out", "log_level", "scene", "dataset", "model", "train", "rollout", "planner", "eval"});
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "log_level", c.log_level);
    if (j.contains("scene")) c.scene = scene_config_from_json(j.at("scene").dump());
    if (j.contains("model")) c.model = wm::model_config_from_json(j.at("model").dump(), c.model);
    if (j.contains("train")) c.train = wm::train_config_from_json(j.at("train").dump(), c.train);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, "dataset",
                 {"flights", "flight_length", "segment_length", "test_fraction", "views", "width", "height",
                  "hfov_deg"});
      take(d, "flights", c.dataset.flights);
      take(d, "flight_length", c.dataset.flight_length);
      take(d, "segment_length", c.dataset.segment_length);
      take(d, "test_fraction", c.dataset.test_fraction);
      take(d, "views", c.dataset.views);
      take(d, "width", c.dataset.width);
      take(d, "height", c.dataset.height);
      take(d, "hfov_deg", c.dataset.hfov_deg);
    }
    if (j.contains("rollout")) {
      const auto& r = j.at("rollout");
      check_keys(r, "rollout", {"context", "horizon", "depth_policy", "stochastic"});
      take(r, "context", c.rollout.context);
      take(r, "horizon", c.rollout.horizon);
      if (r.contains("depth_policy")) c.rollout.depth_policy = parse_depth_policy(r.at("depth_policy").get<std::string>());
      take(r, "stochastic", c.rollout.stochastic);
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      check_keys(p, "planner",
                 {"candidates", "horizon", "sigma_pos", "sigma_yaw_deg", "goal_bias", "temperature", "metric"});
      take(p, "candidates", c.planner.candidates);
      take(p, "horizon", c.planner.horizon);
      take(p, "sigma_pos", c.planner.sigma_pos);
      take(p, "sigma_yaw_deg", c.planner.sigma_yaw_deg);
      take(p, "goal_bias", c.planner.goal_bias);
      take(p, "temperature", c.planner.temperature);
      take(p, "metric", c.planner.metric);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, "eval",
                 {"horizons", "success_threshold", "max_clips", "goal_index", "ffp_target_index", "navigation"});
      take(e, "horizons", c.eval.horizons);
      take(e, "success_threshold", c.eval.success_threshold);
      take(e, "max_clips", c.eval.max_clips);
      take(e, "goal_index", c.eval.goal_index);
      take(e, "ffp_target_index", c.eval.ffp_target_index);
      take(e, "navigation", c.eval.navigation);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open config " + path.string());
  return run_config_from_json(std::string(std::istreambuf_iterator<char>(f), {}), base);
}

std::string to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["log_level"] = c.log_level;
  j["scene"] = nlohmann::ordered_json::parse(scene_config_to_json(c.scene));
  const auto& d = c.dataset;
  j["dataset"] = {{"flights", d.flights},         {"flight_length", d.flight_length},
                  {"segment_length", d.segment_length}, {"test_fraction", d.test_fraction},
                  {"views", d.views},             {"width", d.width},
                  {"height", d.height},           {"hfov_deg", d.hfov_deg}};
  j["model"] = nlohmann::ordered_json::parse(wm::to_json(c.model));
  j["train"] = nlohmann::ordered_json::parse(wm::to_json(c.train));
  j["rollout"] = {{"context", c.rollout.context},
                  {"horizon", c.rollout.horizon},
                  {"depth_policy", to_string(c.rollout.depth_policy)},
                  {"stochastic", c.rollout.stochastic}};
  const auto& p = c.planner;
  j["planner"] = {{"candidates", p.candidates}, {"horizon", p.horizon},     {"sigma_pos", p.sigma_pos},
                  {"sigma_yaw_deg", p.sigma_yaw_deg}, {"goal_bias", p.goal_bias}, {"temperature", p.temperature},
                  {"metric", p.metric}};
  const auto& e = c.eval;
  j["eval"] = {{"horizons", e.horizons},     {"success_threshold", e.success_threshold},
               {"max_clips", e.max_clips},   {"goal_index", e.goal_index},
               {"ffp_target_index", e.ffp_target_index}, {"navigation", e.navigation}};
  return j.dump(2) + "\n";
}

void write_config_snapshot(const std::filesystem::path& dir, const RunConfig& c) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "resolved_config.json");
  if (!f) throw InvalidArgument("cannot write config snapshot in " + dir.string());
  f << to_json(c);
}

std::uint64_t module_seed(const RunConfig& c, const char* label) { return derive_seed(c.seed, label); }

}  // namespace anwm
