#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hubersl/cli.hpp"
#include "hubersl/csv.hpp"

using namespace hubersl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("hubersl_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

void write_training_csv(const std::string& path, Eigen::Index n) {
  std::mt19937_64 rng(81);
  const Dataset d = testing::linear_data(rng, n, 3);
  CsvTable t;
  t.header = {"x0", "y", "x1", "x2"};
  for (Eigen::Index i = 0; i < n; ++i) {
    t.rows.push_back({format_double(d.X(i, 0)), format_double(d.y[i]), format_double(d.X(i, 1)), format_double(d.X(i, 2))});
  }
  write_file_atomic(path, to_csv_string(t));
}

const char* kFitConfig = R"({
  "seed": 5,
  "learners": [
    {"name": "mean", "kind": "Mean"},
    {"name": "ols", "kind": "OLS"},
    {"name": "rf", "kind": "RandomForest", "params": {"trees": 25}},
    {"name": "lasso", "kind": "Lasso"}
  ],
  "super_learner": {"V": 5, "loss_mode": "huber-nested-cv", "D": 3, "grid_size": 4}
})";

const char* kSimConfig = R"({
  "seed": 3,
  "learners": [{"name": "mean", "kind": "Mean"}, {"name": "ols", "kind": "OLS"}],
  "scenario": {"kind": "cost", "regime": "high", "n": 60, "n_test": 300},
  "experiment": {"replications": 1, "V": 3, "D": 3, "grid_size": 3}
})";

const char* kAteConfig = R"({
  "seed": 4,
  "learners": [{"name": "mean", "kind": "Mean"}, {"name": "ols", "kind": "OLS"}],
  "scenario": {"kind": "tweedie", "name": "medium", "n": 120},
  "experiment": {"replications": 2, "V": 3, "D": 3, "grid_size": 3, "truth_draws": 5000}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fit then predict reproduces in-sample predictions bit-exactly") {
  TempDir tmp;
  write_training_csv(tmp.file("train.csv"), 80);
  write_file_atomic(tmp.file("config.json"), kFitConfig);
  std::string out, err;
  REQUIRE(run({"fit", "--data", tmp.file("train.csv"), "--config", tmp.file("config.json"), "--model",
               tmp.file("model.json"), "--in-sample-out", tmp.file("insample.csv")},
              &out, &err) == kExitOk);
  CHECK(out.find("lambda") != std::string::npos);
  REQUIRE(run({"predict", "--model", tmp.file("model.json"), "--data", tmp.file("train.csv"), "--out",
               tmp.file("pred.csv")}) == kExitOk);
  CHECK(read_file(tmp.file("pred.csv")) == read_file(tmp.file("insample.csv")));
  CHECK(read_csv_file(tmp.file("pred.csv")).rows.size() == 80);
}

TEST_CASE("exit codes") {
  TempDir tmp;
  write_training_csv(tmp.file("train.csv"), 40);
  write_file_atomic(tmp.file("bad_key.json"), R"({"super_learner": {"V": 5, "folds": 3}})");
  write_file_atomic(tmp.file("bad_json.json"), "{ nope");
  write_file_atomic(tmp.file("bad_mode.json"), R"({"super_learner": {"loss_mode": "tukey"}})");
  write_file_atomic(tmp.file("ragged.csv"), "x0,y\n1,2\n3\n");
  write_file_atomic(tmp.file("text.csv"), "x0,y\n1,2\n3,oops\n");
  const std::string model = tmp.file("m.json");
  std::string err;

  CHECK(run({"fit", "--data", tmp.file("train.csv"), "--config", tmp.file("bad_key.json"), "--model", model}, nullptr, &err) == kExitConfig);
  CHECK(err.find("folds") != std::string::npos);
  CHECK(run({"fit", "--data", tmp.file("train.csv"), "--config", tmp.file("bad_json.json"), "--model", model}) == kExitConfig);
  CHECK(run({"fit", "--data", tmp.file("train.csv"), "--config", tmp.file("bad_mode.json"), "--model", model}) == kExitConfig);
  CHECK(run({"fit", "--data", tmp.file("train.csv"), "--model", model, "--bogus"}) == kExitConfig);
  CHECK(run({"frobnicate"}) == kExitConfig);
  CHECK(run({}) == kExitConfig);

  CHECK(run({"fit", "--data", tmp.file("ragged.csv"), "--model", model}, nullptr, &err) == kExitData);
  CHECK(err.find("row 3") != std::string::npos);
  CHECK(run({"fit", "--data", tmp.file("text.csv"), "--model", model}, nullptr, &err) == kExitData);
  CHECK(err.find("row 3") != std::string::npos);
  CHECK(err.find("y") != std::string::npos);
  CHECK(run({"fit", "--data", tmp.file("train.csv"), "--outcome", "cost", "--model", model}, nullptr, &err) == kExitData);
  CHECK(err.find("cost") != std::string::npos);
  CHECK(run({"fit", "--data", tmp.file("missing.csv"), "--model", model}) == kExitData);
  CHECK(!fs::exists(model));
  CHECK(run({"report", "--in", tmp.file("train.csv")}) == kExitData);
}

TEST_CASE("installed binary reports exit codes") {
  TempDir tmp;
  const std::string cli = HUBERSL_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto status = [&](const std::string& cmd) {
    const int raw = std::system((cli + " " + cmd + quiet).c_str());
    return WEXITSTATUS(raw);
  };
  write_file_atomic(tmp.file("bad.json"), R"({"unknown": 1})");
  write_file_atomic(tmp.file("bad.csv"), "x0,y\n1\n");
  CHECK(status("--help") == kExitOk);
  CHECK(status("fit --data " + tmp.file("bad.csv") + " --config " + tmp.file("bad.json") + " --model " + tmp.file("m.json")) == kExitConfig);
  CHECK(status("fit --data " + tmp.file("bad.csv") + " --model " + tmp.file("m.json")) == kExitData);
}

TEST_CASE("simulate with one replication is bit-identical across invocations") {
  TempDir tmp;
  write_file_atomic(tmp.file("sim.json"), kSimConfig);
  for (const char* name : {"a", "b"}) {
    const std::string base = tmp.file(name);
    REQUIRE(run({"simulate", "--config", tmp.file("sim.json"), "--out", base + ".csv", "--rows-out", base + "_rows.csv"}) == kExitOk);
  }
  CHECK(read_file(tmp.file("a.csv")) == read_file(tmp.file("b.csv")));
  CHECK(read_file(tmp.file("a_rows.csv")) == read_file(tmp.file("b_rows.csv")));
  REQUIRE(run({"simulate", "--config", tmp.file("sim.json"), "--out", tmp.file("c.csv"), "--workers", "3"}) == kExitOk);
  CHECK(read_file(tmp.file("a.csv")) == read_file(tmp.file("c.csv")));

  const auto manifest = nlohmann::json::parse(read_file(tmp.file("a.csv.manifest.json")));
  CHECK(manifest.at("seed") == 3);
  CHECK(manifest.at("replications") == 1);
  CHECK(manifest.at("config_digest") ==
        nlohmann::json::parse(read_file(tmp.file("c.csv.manifest.json"))).at("config_digest"));
  const CsvTable report = read_csv_file(tmp.file("a.csv"));
  CHECK(report.header == std::vector<std::string>{"scenario", "estimator", "metric", "value"});
  CHECK(!report.rows.empty());

  REQUIRE(run({"simulate", "--config", tmp.file("sim.json"), "--out", tmp.file("d.csv"), "--seed", "4"}) == kExitOk);
  CHECK(read_file(tmp.file("a.csv")) != read_file(tmp.file("d.csv")));
}

TEST_CASE("ate experiment is deterministic") {
  TempDir tmp;
  write_file_atomic(tmp.file("ate.json"), kAteConfig);
  REQUIRE(run({"ate", "--config", tmp.file("ate.json"), "--out", tmp.file("a.csv")}) == kExitOk);
  REQUIRE(run({"ate", "--config", tmp.file("ate.json"), "--out", tmp.file("b.csv"), "--workers", "2"}) == kExitOk);
  CHECK(read_file(tmp.file("a.csv")) == read_file(tmp.file("b.csv")));
  CHECK(read_file(tmp.file("a.csv")).find("tmle-standard-sl") != std::string::npos);
  write_file_atomic(tmp.file("wrong.json"), kSimConfig);
  CHECK(run({"ate", "--config", tmp.file("wrong.json"), "--out", tmp.file("w.csv")}) == kExitConfig);
}

TEST_CASE("report renders the golden fixture byte-for-byte") {
  TempDir tmp;
  const std::string dir = HUBERSL_TEST_DATA_DIR;
  std::string out;
  REQUIRE(run({"report", "--in", dir + "/golden_report.csv"}, &out) == kExitOk);
  CHECK(out == read_file(dir + "/golden_report.md"));
  REQUIRE(run({"report", "--in", dir + "/golden_report.csv", "--out", tmp.file("r.md")}) == kExitOk);
  CHECK(read_file(tmp.file("r.md")) == read_file(dir + "/golden_report.md"));
}

}
