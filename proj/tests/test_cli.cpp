#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string &args) {
  const std::string cmd = std::string(DYNRES_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE *p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string &name) {
  const fs::path d = fs::temp_directory_path() / ("dynres_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char *kTinyConfig = R"({
  "sim": {"n_pieces": 30},
  "data": {"n_episodes": 2, "steps": 3},
  "train": {"epochs": 1, "windows_per_epoch": 4, "val_windows": 2, "omega_min": 5, "omega_max": 20,
            "val_fraction": 0.5}
})";

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("--help").code == 0);
  const fs::path d = scratch("usage");
  {
    std::ofstream(d / "bad.json") << R"({"planner": {"smaples": 2}})";
  }
  const Result bad = run("gen-data --config " + (d / "bad.json").string() + " --out " + (d / "run").string());
  CHECK(bad.code == 1);
  CHECK(bad.output.find("smaples") != std::string::npos);
  CHECK(run("eval --mode sometimes --out " + (d / "run").string()).code == 1);
  CHECK(run("eval --tasks stack --out " + (d / "run").string()).code == 1);
  CHECK(run("gen-data --config " + (d / "missing.json").string()).code == 1);
}

TEST_CASE("a missing checkpoint is a runtime error naming the path") {
  const fs::path d = scratch("missing");
  const Result r = run("eval --quiet --out " + d.string());
  CHECK(r.code == 2);
  CHECK(r.output.find((d / "model" / "gnn.ckpt").string()) != std::string::npos);
}

TEST_CASE("commands refuse to overwrite outputs unless forced") {
  const fs::path d = scratch("overwrite");
  {
    std::ofstream(d / "tiny.json") << kTinyConfig;
  }
  const std::string base = "--quiet --config " + (d / "tiny.json").string() + " --out " + (d / "run").string();
  REQUIRE(run("gen-data " + base).code == 0);
  CHECK(fs::exists(d / "run" / "data" / "manifest.json"));
  CHECK(fs::exists(d / "run" / "data" / "episode_0000.ndjson"));
  const Result again = run("gen-data " + base);
  CHECK(again.code == 2);
  CHECK(again.output.find("--force") != std::string::npos);
  CHECK(run("gen-data --force " + base).code == 0);

  REQUIRE(run("train " + base).code == 0);
  CHECK(fs::exists(d / "run" / "model" / "gnn.ckpt"));
  CHECK(fs::exists(d / "run" / "model" / "gnn.ckpt.manifest"));
  CHECK(fs::exists(d / "run" / "model" / "loss_curve.csv"));
}
