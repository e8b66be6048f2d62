/* Copyright 2026 The mcda Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using mcda::testing::TempDir;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const CliRun r = cli("pretrain --count 6 --ce-epochs 1 --dice-epochs 1 --out " +
                      (root() / "pre").string());
    ASSERT_EQ(r.code, 0) << r.err;
    ckpt_ = new std::string(root() / "pre" / "source.ckpt");
  }
  static void TearDownTestSuite() {
    delete ckpt_;
    delete dir_;
  }

  static fs::path root() { return dir_->path(); }

  static CliRun cli(const std::string& args) {
    static int n = 0;
    const fs::path out = root() / ("stdout." + std::to_string(n));
    const fs::path err = root() / ("stderr." + std::to_string(n++));
    const std::string cmd = std::string(MCDA_CLI_PATH) + " " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

  static TempDir* dir_;
  static std::string* ckpt_;
};

TempDir* CliTest::dir_ = nullptr;
std::string* CliTest::ckpt_ = nullptr;

TEST_F(CliTest, PretrainRunDirectoryLayout) {
  const fs::path d = root() / "pre";
  for (const char* f : {"config.json", "log.jsonl", "record.json", "summary.json", "source.ckpt"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  EXPECT_EQ(read_json(d / "config.json")["schema_version"], 1);
  const Json rec = read_json(d / "record.json");
  ASSERT_EQ(rec["epochs"].size(), 2u);
  EXPECT_EQ(rec["epochs"][0]["boundary_kind"], "bce");
  EXPECT_EQ(rec["epochs"][1]["boundary_kind"], "dice");
  std::ifstream log(d / "log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    EXPECT_EQ(Json::parse(line)["event"], "pretrain_epoch");
    ++lines;
  }
  EXPECT_EQ(lines, 2);
}

TEST_F(CliTest, AdaptEvaluateRoundTrip) {
  const fs::path a = root() / "adapt";
  CliRun r = cli("adapt --checkpoint " + *ckpt_ + " --count 4 --epochs 1 --out " + a.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json cfg = read_json(a / "config.json");
  EXPECT_EQ(cfg["adaptation"]["weights"]["alpha"], 100.0);
  EXPECT_EQ(cfg["adaptation"]["weights"]["beta"], 1.0);
  EXPECT_TRUE(fs::exists(a / "adapted.ckpt"));
  EXPECT_TRUE(fs::exists(a / "table.txt"));
  const Json sum = read_json(a / "summary.json");
  EXPECT_TRUE(sum.contains("before"));
  EXPECT_TRUE(sum.contains("after"));

  const fs::path e = root() / "eval";
  r = cli("evaluate --checkpoint " + (a / "adapted.ckpt").string() + " --baseline " + *ckpt_ +
          " --count 4 --out " + e.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string table = slurp(e / "table.txt");
  EXPECT_NE(table.find("w/o adaptation"), std::string::npos);
  EXPECT_NE(table.find("MCDA"), std::string::npos);
  EXPECT_TRUE(fs::exists(e / "metrics.json"));
}

TEST_F(CliTest, SeedIsReproducible) {
  const std::string base = "pretrain --count 3 --ce-epochs 1 --dice-epochs 0 --seed 7 --out ";
  ASSERT_EQ(cli(base + (root() / "s1").string()).code, 0);
  ASSERT_EQ(cli(base + (root() / "s2").string()).code, 0);
  EXPECT_EQ(slurp(root() / "s1" / "source.ckpt"), slurp(root() / "s2" / "source.ckpt"));
}

TEST_F(CliTest, ZeroEpochsReproducesTheSource) {
  const fs::path a = root() / "zero";
  const CliRun r = cli("adapt --checkpoint " + *ckpt_ +
                    " --count 3 --epochs 0 --alpha 0 --beta 0 --out " + a.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const Json cfg = read_json(a / "config.json");
  EXPECT_EQ(cfg["adaptation"]["weights"]["alpha"], 0.0);
  EXPECT_EQ(cfg["adaptation"]["weights"]["beta"], 0.0);
  const fs::path e1 = root() / "ev-src", e2 = root() / "ev-zero";
  ASSERT_EQ(cli("evaluate --checkpoint " + *ckpt_ + " --count 3 --out " + e1.string()).code, 0);
  ASSERT_EQ(cli("evaluate --checkpoint " + (a / "adapted.ckpt").string() + " --count 3 --out " +
                e2.string())
                .code,
            0);
  EXPECT_EQ(read_json(e1 / "metrics.json")["rows"][0]["metrics"],
            read_json(e2 / "metrics.json")["rows"][0]["metrics"]);
}

TEST_F(CliTest, ConfigurationErrorsExitTwo) {
  CliRun r = cli("pretrain --dataset /nonexistent/data --out " + (root() / "x1").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(root() / "x1"));

  const fs::path unl = root() / "unlabeled";
  ASSERT_EQ(cli("synth --preset synthetic-target --count 2 --no-masks --out " + unl.string()).code,
            0);
  r = cli("evaluate --checkpoint " + *ckpt_ + " --dataset " + unl.string() + " --out " +
          (root() / "x2").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("masks"), std::string::npos) << r.err;

  {
    std::ofstream f(root() / "arch.json");
    f << R"({"schema_version": 1, "arch": {"feature_channels": 16}})";
  }
  r = cli("adapt --config " + (root() / "arch.json").string() + " --checkpoint " + *ckpt_ +
          " --count 2 --epochs 1 --out " + (root() / "x3").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("architecture"), std::string::npos) << r.err;

  r = cli("adapt --checkpoint " + (root() / "missing.ckpt").string() + " --out " +
          (root() / "x4").string());
  EXPECT_EQ(r.code, 2);

  r = cli("pretrain --count 2 --ce-epochs 1 --dice-epochs 0 --out " + (root() / "pre").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--force"), std::string::npos) << r.err;

  EXPECT_EQ(cli("adapt --bogus").code, 2);
}

TEST_F(CliTest, ForceWritesASibling) {
  const std::string args = "synth --count 1 --out " + (root() / "ds").string();
  ASSERT_EQ(cli(args).code, 0);
  ASSERT_EQ(cli(args + " --force").code, 0);
  EXPECT_TRUE(fs::exists(root() / "ds-1" / "images"));
  EXPECT_TRUE(fs::exists(root() / "ds-1" / "masks"));
}

TEST_F(CliTest, AblateWithoutSweepWritesOnlyTheTable) {
  const fs::path d = root() / "abl";
  const CliRun r = cli("ablate --checkpoint " + *ckpt_ + " --count 2 --epochs 1 --sweep none --out " +
                    d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "ablation.txt"));
  EXPECT_EQ(read_json(d / "ablation.json")["rows"].size(), 4u);
  EXPECT_FALSE(fs::exists(d / "alpha_sweep.svg"));
  EXPECT_FALSE(fs::exists(d / "beta_sweep.svg"));
}

TEST_F(CliTest, AlphaSweepPlotHasEightTicks) {
  const fs::path d = root() / "sweep";
  const CliRun r = cli("ablate --checkpoint " + *ckpt_ +
                    " --count 2 --epochs 0 --sweep alpha --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string svg = slurp(d / "alpha_sweep.svg");
  std::size_t ticks = 0;
  for (std::size_t p = 0; (p = svg.find("<g class=\"xtick\">", p)) != std::string::npos; ++p) ++ticks;
  EXPECT_EQ(ticks, 8u);
  EXPECT_FALSE(fs::exists(d / "beta_sweep.svg"));
  EXPECT_TRUE(fs::exists(d / "alpha_sweep.txt"));
}

}  // namespace
