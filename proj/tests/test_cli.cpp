#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anwm/cli.hpp"
#include "anwm/errors.hpp"
#include "anwm/experiments.hpp"
#include "anwm/run_config.hpp"
#include "support.hpp"

using namespace anwm;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "anwm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run({"--help"}) == 0);
  CHECK(run({}) == 2);
  CHECK(run({"teleport"}) == 2);
  CHECK(run({"gen-dataset"}) == 2);
  const auto dir = testing::temp_dir("cli_codes");
  CHECK(run({"eval", "--data", dir.string(), "--report", (dir / "r.json").string()}) == 2);
  CHECK(run({"ffp", "--clip", (dir / "missing").string(), "--out", dir.string()}) == 1);
}

TEST_CASE("gen-dataset and ffp write outputs and config snapshots") {
  const auto dir = testing::temp_dir("cli_dataset");
  const auto data = dir / "data";
  REQUIRE(run({"gen-dataset", "--out", data.string(), "--flights", "2", "--flight-length", "20", "--segment-length",
               "10", "--views", "1", "--width", "16", "--height", "16", "--seed", "3"}) == 0);
  CHECK(std::filesystem::exists(data / "dataset.json"));
  CHECK(std::filesystem::exists(data / "resolved_config.json"));
  const RunConfig snap = load_run_config(data / "resolved_config.json");
  CHECK(snap.seed == 3);
  CHECK(snap.dataset.width == 16);
  const auto clip = data / "clips" / "f000_s00_v0";
  REQUIRE(std::filesystem::exists(clip));
  CHECK(run({"ffp", "--clip", clip.string(), "--out", (dir / "ffp").string(), "--count", "2"}) == 0);
  CHECK(std::filesystem::exists(dir / "ffp" / "ffp.json"));
  CHECK(std::filesystem::exists(dir / "ffp" / "resolved_config.json"));
}

TEST_CASE("run config overlay and validation") {
  const RunConfig c = run_config_from_json(R"({"seed": 9, "train": {"learning_rate": 0.001}, "model": {"embed_dim": 32}})");
  CHECK(c.seed == 9);
  CHECK(c.train.learning_rate == 0.001);
  CHECK(c.train.batch_size == wm::TrainConfig{}.batch_size);
  CHECK(c.model.embed_dim == 32);
  CHECK_THROWS_AS(run_config_from_json(R"({"sed": 1})"), InvalidArgument);
  CHECK_THROWS_AS(run_config_from_json(R"({"train": {"lr": 1}})"), InvalidArgument);
  CHECK_THROWS_AS(run_config_from_json("{"), InvalidArgument);
  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(module_seed(c, "train") != module_seed(c, "rollout"));
  CHECK(module_seed(c, "train") == module_seed(back, "train"));
}

TEST_CASE("report json is stable and carries unavailable metrics as null") {
  MetricReport r;
  r.kind = "generation";
  r.rows.push_back({"h4", {{"mse", 0.25}, {"ssim", 0.5}}});
  r.failures.push_back("clip-x: too short");
  const std::vector<MetricReport> reports{r};
  const std::string a = reports_to_json(reports), b = reports_to_json(reports);
  CHECK(a == b);
  CHECK(a.find("\"schema_version\": 1") != std::string::npos);
  CHECK(a.find("\"lpips\": null") != std::string::npos);
  CHECK(r.rows[0].at("ssim") == 0.5);
  CHECK_THROWS(r.rows[0].at("fid"));
  const auto dir = testing::temp_dir("cli_report");
  write_reports(dir / "r.json", reports);
  CHECK(slurp(dir / "r.json") == a);
}
