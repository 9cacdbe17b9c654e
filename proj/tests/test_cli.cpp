#include <doctest.h>

#include <cstdlib>

#include <json.hpp>

#include "recognn/pipeline.hpp"
#include "support.hpp"

using namespace recognn;
using namespace testing;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RECOGNN_BIN) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// a small synthetic dataset and a fast config next to it
struct Workspace {
  TempDir dir;
  std::filesystem::path data = dir / "data";
  std::filesystem::path config = dir / "config.json";

  Workspace() {
    REQUIRE(run("synth --base-tuples 200 --seed 4 --out " + data.string()) == 0);
    nlohmann::json j = {{"version", 1},
                        {"dataset", data.string()},
                        {"seed", 4},
                        {"coreset", {{"samples", 120}}},
                        {"stage1", {{"epochs", 2}}},
                        {"stage2", {{"epochs", 15}, {"d_model", 16}}}};
    write_text(config, j.dump(2));
  }

  std::string with(const std::filesystem::path& out) const {
    return "-c " + config.string() + " --out " + out.string();
  }
};

}  // namespace

TEST_CASE("config parsing") {
  CHECK_NOTHROW(PipelineConfig::from_json(nlohmann::json::object()));
  CHECK_THROWS_AS(PipelineConfig::from_json({{"version", 1}, {"sed", 3}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"version", 2}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json({{"stage2", {{"epoch", 3}}}}), ConfigError);
  auto c = PipelineConfig::from_json({{"seed", 9}, {"subtables", {{"ell", 0.3}}}});
  CHECK(c.seed == 9);
  CHECK(c.ell == 0.3);
  auto back = PipelineConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(PipelineConfig::from_json({{"subtables", {{"ell", 1.5}}}}).validate(), ConfigError);
}

TEST_CASE("exit codes") {
  Workspace w;
  CHECK(run("train-stage2 " + w.with(w.dir / "empty")) == 2);
  write_text(w.dir / "bad.json", "{\"version\": 1, \"bogus\": true}");
  CHECK(run("run-all -c " + (w.dir / "bad.json").string()) == 3);
  write_text(w.dir / "broken.json", "{ not json");
  CHECK(run("run-all -c " + (w.dir / "broken.json").string()) == 3);
  CHECK(run("ingest --dataset " + (w.dir / "nowhere").string() + " --out " + (w.dir / "x").string()) == 4);
  CHECK(run("no-such-command") != 0);
}

TEST_CASE("stages compose to the same result as run-all") {
  Workspace w;
  const auto all = w.dir / "all", staged = w.dir / "staged";
  REQUIRE(run("run-all " + w.with(all)) == 0);
  for (const std::string stage : {"ingest", "plan", "link", "train-stage1", "split", "build-graph", "train-stage2",
                                  "predict", "evaluate"})
    REQUIRE_MESSAGE(run(stage + " " + w.with(staged)) == 0, stage);
  for (const std::string f : {"predictions.csv", "manifests.json", "metrics.json", "feature_report.txt"}) {
    REQUIRE(std::filesystem::exists(all / f));
    CHECK_MESSAGE(slurp(all / f) == slurp(staged / f), f);
  }
  auto metrics = nlohmann::json::parse(slurp(all / "metrics.json"));
  CHECK(metrics.dump().find("auc_roc") != std::string::npos);

  // flag overrides reach the stage: re-split with a different threshold
  REQUIRE(run("split --ell 0.5 " + w.with(staged)) == 0);
  auto manifests = nlohmann::json::parse(slurp(staged / "manifests.json"));
  CHECK(manifests.dump().find("0.5") != std::string::npos);
  CHECK(slurp(staged / "manifests.json") != slurp(all / "manifests.json"));
}
