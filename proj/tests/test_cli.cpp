#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fsnas/cli.hpp"
#include "fsnas/csv.hpp"

using namespace fsnas;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fsnas-test-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path tiny_config(const fs::path& dir) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << R"({
  "dataset": {"sizes": [256, 128, 128]},
  "space": {"n": 3, "m": 3, "h": 8},
  "training": {"oracle": {"epochs": 4, "batch_size": 64}, "root": {"epochs": 6, "batch_size": 64},
               "child": {"epochs": 2, "batch_size": 64}},
  "split": {"total_epoch_budget": "unlimited", "edges": [0, 2]},
  "search": {"sample_budget": 12, "population": 4, "tournament": 2, "k": 2}
})";
  return p;
}

}  // namespace

TEST_CASE("gen-space") {
  const fs::path dir = workdir("gen");
  std::ofstream(dir / "c.json") << R"({"space": {"n": 4, "m": 5}})";
  const Run r = run({"--config", (dir / "c.json").string(), "--out", dir.string(), "gen-space"});
  CHECK(r.code == 0);
  CHECK(r.out == "edges=6 architectures=15625\n");
  const Run d = run({"--out", dir.string(), "gen-space"});
  CHECK(d.out == "edges=3 architectures=125\n");
}

TEST_CASE("usage and runtime errors") {
  const fs::path dir = workdir("errors");
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--out", dir.string(), "gen-space", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const Run none = run({"--out", dir.string(), "search", "--algo", "rea"});
  CHECK(none.code == 1);
  CHECK(none.err.find("no evaluator available") != std::string::npos);
  CHECK(std::count(none.err.begin(), none.err.end(), '\n') == 1);

  std::ofstream(dir / "bad.json") << "{\n\"space\": {\"n\": 3,}\n}";
  const Run parse = run({"--config", (dir / "bad.json").string(), "--out", dir.string(), "gen-space"});
  CHECK(parse.code == 1);
  CHECK(parse.err.find("line 2") != std::string::npos);

  std::ofstream(dir / "unknown.json") << R"({"space": {"q": 3}})";
  const Run unknown = run({"--config", (dir / "unknown.json").string(), "--out", dir.string(), "gen-space"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("space.q") != std::string::npos);

  const Run missing = run({"validate", (dir / "nothing.fsns").string()});
  CHECK(missing.code == 1);
}

TEST_CASE("FSNAS_OUT picks the output directory unless --out is given") {
  const fs::path dir = workdir("env");
  ::setenv("FSNAS_OUT", (dir / "from-env").string().c_str(), 1);
  CHECK(run({"gen-space"}).code == 0);
  CHECK(fs::exists(dir / "from-env"));
  CHECK(run({"--out", (dir / "from-flag").string(), "gen-space"}).code == 0);
  CHECK(fs::exists(dir / "from-flag"));
  ::unsetenv("FSNAS_OUT");
}

TEST_CASE("end-to-end pipeline with deterministic outputs") {
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = workdir("e2e" + std::to_string(pass));
    const std::string cfg = tiny_config(dir).string();
    const std::vector<std::string> base{"--config", cfg, "--out", (dir / "out").string(), "--jobs", "2"};
    auto with = [&](std::initializer_list<std::string> extra) {
      std::vector<std::string> a = base;
      a.insert(a.end(), extra);
      return run(a);
    };
    Run r = with({"train-oracle"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("oracle records=27") != std::string::npos);
    r = with({"train-tree"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("leaves=9") != std::string::npos);
    r = with({"eval-corr"});
    REQUIRE(r.code == 0);
    r = with({"search", "--algo", "rea", "--evaluator", "few_shot", "--level", "1"});
    REQUIRE(r.code == 0);
    r = with({"retrain"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("final=", 0) == 0);
    r = with({"report"});
    REQUIRE(r.code == 0);

    const fs::path out = dir / "out";
    const auto corr = csv::read(out / "correlation.csv");
    CHECK(corr.header == std::vector<std::string>{"level", "supernet_count", "split_edges", "seed", "tau", "concordant",
                                                  "discordant", "ties_x", "ties_y", "cost_epochs"});
    REQUIRE(corr.rows.size() == 3);
    CHECK(corr.rows[1][1] == "3");
    CHECK(corr.rows[2][2] == "0|2");
    const auto oracle = csv::read(out / "oracle.csv");
    CHECK(oracle.header == std::vector<std::string>{"encoding", "valid_acc", "test_acc", "reachable", "train_epochs"});
    CHECK(oracle.rows.size() == 27);
    const auto trace = csv::read(out / "trace.csv");
    CHECK(trace.header == std::vector<std::string>{"step", "encoding", "proxy_score", "true_score", "best_true_so_far"});
    CHECK(trace.rows.size() == 12);
    CHECK(fs::exists(out / "summary.csv"));
    CHECK(fs::exists(out / "retrain.csv"));

    const Run v = run({"validate", (out / "tree" / "L1_N2.fsns").string()});
    CHECK(v.code == 0);
    CHECK(v.out.rfind("ok version=1", 0) == 0);

    for (const char* name : {"oracle.csv", "correlation.csv", "trace.csv", "retrain.csv", "summary.csv"}) {
      const std::string text = slurp(out / name);
      if (pass == 0)
        first[name] = text;
      else
        CHECK_MESSAGE(text == first[name], name);
    }
  }
}

TEST_CASE("train-oracle resumes from a partial table") {
  const fs::path dir = workdir("resume");
  const std::string cfg = tiny_config(dir).string();
  const std::string out = (dir / "out").string();
  REQUIRE(run({"--config", cfg, "--out", out, "train-oracle"}).code == 0);
  const std::string full = slurp(dir / "out" / "oracle.csv");
  std::istringstream lines(full);
  std::string partial, line;
  for (int i = 0; i < 10 && std::getline(lines, line); ++i) partial += line + "\n";
  std::ofstream(dir / "out" / "oracle.csv", std::ios::trunc) << partial;
  REQUIRE(run({"--config", cfg, "--out", out, "train-oracle"}).code == 0);
  const auto a = csv::read(dir / "out" / "oracle.csv");
  CHECK(a.rows.size() == 27);
}

TEST_CASE("search with the gradient driver needs a mixture tree") {
  const fs::path dir = workdir("gradient");
  const std::string cfg = tiny_config(dir).string();
  const std::string out = (dir / "out").string();
  REQUIRE(run({"--config", cfg, "--out", out, "train-tree", "--mode", "mixture"}).code == 0);
  const Run r = run({"--config", cfg, "--out", out, "search", "--algo", "gradient"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("selected=", 0) == 0);
  CHECK(run({"--config", cfg, "--out", out, "train-tree", "--mode", "bogus"}).code == 2);
}

TEST_CASE("cleanup") { fs::remove_all(workdir("x").parent_path()); }
