// Copyright 2026 The msqale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "msqale/cli.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using msq::testing::scratch_dir;
using msq::testing::source_dir;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = msq::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// corpus -> train -> pristine -> score -> mos -> eval on the bundled toy set.
void toy_pipeline(const fs::path& run_dir) {
  const fs::path toy = source_dir() / "data" / "toy";
  const std::vector<std::string> common = {"--config", (toy / "toy.conf").string(), "--run-dir",
                                           run_dir.string()};
  auto step = [&](std::string cmd, std::vector<std::string> extra) {
    std::vector<std::string> args{cmd};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    const auto o = cli(args);
    INFO(cmd << ": " << o.err);
    REQUIRE(o.code == msq::kExitOk);
  };
  step("corpus", {"--bases", (toy / "bases").string()});
  step("train", {});
  step("pristine", {});
  step("score", {"--images", (toy / "test").string()});
  step("mos", {"--ratings", (toy / "ratings.csv").string()});
  step("eval", {});
}

}  // namespace

TEST_CASE("--help prints usage and exits 0") {
  const auto o = cli({"--help"});
  CHECK(o.code == msq::kExitOk);
  CHECK(o.out.find("corpus") != std::string::npos);
  CHECK(o.out.find("eval") != std::string::npos);
  const auto sub = cli({"train", "--help"});
  CHECK(sub.code == msq::kExitOk);
  CHECK(sub.out.find("--epochs") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({"frobnicate"}).code == msq::kExitUsage);
  CHECK(cli({}).code == msq::kExitUsage);
  CHECK(cli({"train", "--no-such-flag", "1"}).code == msq::kExitUsage);
  const auto bad = cli({"train", "--epochs", "many"});
  CHECK(bad.code == msq::kExitUsage);
  CHECK(bad.err.find("epochs") != std::string::npos);
}

TEST_CASE("runtime failures exit 1 with a machine-readable error line") {
  const auto dir = scratch_dir("cli_fail");
  const auto o = cli({"score", "--run-dir", dir.string(), "--images", (dir / "missing").string()});
  CHECK(o.code == msq::kExitFailure);
  CHECK(o.err.rfind("error code=", 0) == 0);
  const auto cfg = cli({"corpus", "--config", (dir / "nope.conf").string()});
  CHECK(cfg.code == msq::kExitFailure);
  CHECK(cfg.err.find("code=missing_file") != std::string::npos);
}

TEST_CASE("the installed binary reports the same exit codes") {
  const char* exe = std::getenv("MSQALE_CLI");
  if (!exe) return;
  const std::string quiet = " >/dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system((std::string(exe) + " --help" + quiet).c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((std::string(exe) + " frobnicate" + quiet).c_str())) == 2);
}

TEST_CASE("layered configuration is logged with its sources") {
  const auto dir = scratch_dir("cli_layers");
  std::ofstream(dir / "a.conf") << "scenes = 2\nimage_size = 64\nversions = 3\nseed = 4\n";
  setenv("MSQALE_VERSIONS", "2", 1);
  const auto o = cli({"corpus", "--config", (dir / "a.conf").string(), "--run-dir",
                      (dir / "run").string(), "--image-size", "48"});
  unsetenv("MSQALE_VERSIONS");
  REQUIRE(o.code == msq::kExitOk);
  CHECK(o.out.find("run_dir") != std::string::npos);
  const std::string resolved = slurp(dir / "run" / "config.resolved");
  CHECK(resolved.find("image_size = 48  # flag --image-size") != std::string::npos);
  CHECK(resolved.find("versions = 2  # MSQALE_VERSIONS") != std::string::npos);
  CHECK(resolved.find("scenes = 2  #") != std::string::npos);
  CHECK(resolved.find("tau = 0.1  # default") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "corpus" / "manifest.json"));
  CHECK(fs::exists(dir / "run" / "corpus" / "scene_001" / "1.png"));
  CHECK(fs::exists(dir / "run" / "logs" / "corpus.log"));
}

TEST_CASE("a fresh run directory is created under runs_dir") {
  const auto dir = scratch_dir("cli_runs");
  const auto o = cli({"corpus", "--runs-dir", dir.string(), "--tag", "t", "--scenes", "2",
                      "--image-size", "48", "--versions", "2"});
  REQUIRE(o.code == msq::kExitOk);
  int found = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++found;
    const std::string n = e.path().filename().string();
    CHECK(n.size() > 2);
    CHECK(n.find("-t") != std::string::npos);
    CHECK(fs::exists(e.path() / "config.resolved"));
  }
  CHECK(found == 1);
}

TEST_CASE("toy smoke pipeline: finite results, byte-identical on repeat") {
  const auto dir = scratch_dir("cli_smoke");
  toy_pipeline(dir / "a");
  toy_pipeline(dir / "b");
  for (const char* f : {"scores.csv", "eval.csv", "mos.csv", "pristine.model"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  for (const char* w : {"image", "hp1", "hp2", "lowpass"})
    CHECK(fs::exists(dir / "a" / "weights" / (std::string(w) + ".msqw")));
  CHECK(fs::exists(dir / "a" / "logs" / "loss_hp1.csv"));

  std::ifstream in(dir / "a" / "eval.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# msqale eval v1");
  std::getline(in, line);
  CHECK(line == "metric,median_srcc,std_srcc,median_plcc,std_plcc");
  REQUIRE(std::getline(in, line));
  std::stringstream row(line);
  std::string cell;
  std::getline(row, cell, ',');
  CHECK(cell == "msqale");
  int values = 0;
  while (std::getline(row, cell, ',')) {
    CHECK(std::isfinite(std::stod(cell)));
    ++values;
  }
  CHECK(values == 4);

  std::ifstream scores(dir / "a" / "scores.csv");
  std::getline(scores, line);
  CHECK(line == "# msqale scores v1 features=msqale");
  std::getline(scores, line);
  CHECK(line == "path,Q,patch_count");
  int rows = 0;
  while (std::getline(scores, line)) ++rows;
  CHECK(rows == 40);
}

TEST_CASE("nss baseline goes through the same pipeline") {
  const auto dir = scratch_dir("cli_nss");
  const fs::path toy = source_dir() / "data" / "toy";
  const std::string run = (dir / "r").string();
  REQUIRE(cli({"pristine", "--run-dir", run, "--pristine-images", (toy / "bases").string(),
               "--features", "nss", "--patch", "32"}).code == msq::kExitOk);
  REQUIRE(cli({"score", "--run-dir", run, "--images", (toy / "test").string()}).code ==
          msq::kExitOk);
  REQUIRE(cli({"mos", "--run-dir", run, "--ratings", (toy / "ratings.csv").string()}).code ==
          msq::kExitOk);
  const auto e = cli({"eval", "--run-dir", run, "--splits", "10"});
  CHECK(e.code == msq::kExitOk);
  CHECK(slurp(dir / "r" / "eval.csv").find("\nnss,") != std::string::npos);
}
