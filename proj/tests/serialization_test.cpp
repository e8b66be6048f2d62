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

#include "mcda/serialization.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mcda/errors.hpp"
#include "mcda/experiment.hpp"
#include "test_support.hpp"

namespace mcda {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string error_of(const Json& j) {
  ExperimentConfig c;
  try {
    read_json(j, "", c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigJson, RoundTripIsLossless) {
  ExperimentConfig c;
  c.dataset.seed = 42;
  c.dataset.target_count = 7;
  c.adaptation.weights = {12.5, 0.25};
  c.adaptation.epochs = 3;
  c.pretrain.schedule = {4, 2};
  c.arch.norm = "pixel-layernorm";
  c.output_dir = "out/x";
  c.report_formats = {"json"};
  const Json j = c;
  ExperimentConfig back;
  read_json(j, "", back);
  EXPECT_EQ(Json(back).dump(), j.dump());
  EXPECT_EQ(back.adaptation.weights.alpha, 12.5);
  EXPECT_EQ(back.pretrain.schedule.ce_epochs, 4);
  EXPECT_EQ(back.arch.norm, "pixel-layernorm");
}

TEST(ConfigJson, DefaultsAreTheDocumentedOnes) {
  const ExperimentConfig c;
  EXPECT_EQ(c.adaptation.weights.alpha, 100.0);
  EXPECT_EQ(c.adaptation.weights.beta, 1.0);
  EXPECT_EQ(c.adaptation.adam.lr, 1e-3);
  EXPECT_EQ(c.adaptation.batch_size, 8);
  EXPECT_EQ(c.adaptation.optimizer, "adam");
}

TEST(ConfigJson, ErrorsNameTheFieldPath) {
  EXPECT_NE(error_of(Json{{"dataset", Json::object()}}).find("schema_version: required"),
            std::string::npos);
  EXPECT_NE(error_of(Json{{"schema_version", 2}}).find("unsupported version"), std::string::npos);
  const std::string unknown =
      error_of(Json{{"schema_version", 1}, {"adaptation", {{"gamma", 1}}}});
  EXPECT_NE(unknown.find("adaptation.gamma"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("unknown field"), std::string::npos) << unknown;
  const std::string type = error_of(
      Json{{"schema_version", 1}, {"adaptation", {{"weights", {{"alpha", "big"}}}}}});
  EXPECT_NE(type.find("adaptation.weights.alpha"), std::string::npos) << type;
  const std::string ds = error_of(Json{{"schema_version", 1}, {"dataset", {{"seed", -3}}}});
  EXPECT_NE(ds.find("dataset.seed"), std::string::npos) << ds;
}

TEST(ConfigJson, PartialConfigKeepsDefaults) {
  ExperimentConfig c;
  read_json(Json{{"schema_version", 1}, {"adaptation", {{"epochs", 4}}}}, "", c);
  EXPECT_EQ(c.adaptation.epochs, 4);
  EXPECT_EQ(c.adaptation.weights.alpha, 100.0);
  EXPECT_EQ(c.dataset.source, "synthetic-source");
}

TEST(ConfigJson, ValidateRejectsBadValues) {
  ExperimentConfig c;
  c.report_formats = {"pdf"};
  EXPECT_THROW(validate(c), ConfigError);
  c = ExperimentConfig{};
  c.dataset.source_count = 0;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
}

TEST(ConfigJson, LoadFromFile) {
  TempDir dir("cfg");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"schema_version": 1, "dataset": {"seed": 9}})";
  }
  EXPECT_EQ(load_experiment_config(dir / "c.json").dataset.seed, 9u);
  {
    std::ofstream f(dir / "bad.json");
    f << "{ not json";
  }
  EXPECT_THROW(load_experiment_config(dir / "bad.json"), ConfigError);
  EXPECT_THROW(load_experiment_config(dir / "missing.json"), ConfigError);
}

TEST(ConfigJson, ShippedExampleLoads) {
  const ExperimentConfig c = load_experiment_config(MCDA_EXAMPLE_CONFIG);
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.adaptation.weights.alpha, 100.0);
  EXPECT_EQ(c.pretrain.schedule.ce_epochs, 25);
}

TEST(RecordJson, RunRecordRoundTrip) {
  RunRecord r;
  r.kind = "adapt";
  r.config_json = "{}";
  const auto s = synth_dataset(synthetic_source_preset(), 2, 0);
  std::vector<Planes> p{s[0].mask, s[1].mask};
  r.initial_metrics = score_predictions(p, p);
  EpochRecord e;
  e.epoch = 0;
  e.losses = {{"L_Tseg", 0.5}, {"total", 0.75}};
  e.metrics = r.initial_metrics;
  e.checkpoint = "checkpoints/epoch_0.ckpt";
  r.epochs.push_back(e);
  r.warnings = {"w"};
  r.checkpoints = {e.checkpoint};
  r.wall_clock_seconds = 1.5;
  const RunRecord back = run_record_from_json(Json(r));
  EXPECT_EQ(Json(back).dump(), Json(r).dump());
}

TEST(RunDirectoryTest, ExistingTargetNeedsForce) {
  TempDir dir("rundir");
  fs::create_directories(dir / "run");
  EXPECT_THROW(RunDirectory(dir / "run", false), ConfigError);
  RunDirectory rd(dir / "run", true);
  EXPECT_EQ(rd.path(), dir / "run-1");
  rd.write_text("a/b.txt", "hi");
  EXPECT_FALSE(fs::exists(dir / "run-1"));
  rd.commit();
  std::ifstream f(dir / "run-1" / "a" / "b.txt");
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(ss.str(), "hi");
}

TEST(RunDirectoryTest, UncommittedStagingIsRemoved) {
  TempDir dir("rundir2");
  fs::path staging;
  {
    RunDirectory rd(dir / "run", false);
    staging = rd.staging();
    rd.write_text("x.txt", "1");
    EXPECT_TRUE(fs::exists(staging));
  }
  EXPECT_FALSE(fs::exists(staging));
  EXPECT_FALSE(fs::exists(dir / "run"));
}

TEST(JsonlLogTest, OneObjectPerLine) {
  TempDir dir("jsonl");
  JsonlLog log(dir / "log.jsonl");
  log.write(Json{{"epoch", 0}});
  log.write(Json{{"epoch", 1}, {"loss", 0.5}});
  std::ifstream f(dir / "log.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    EXPECT_EQ(Json::parse(line)["epoch"], n);
    ++n;
  }
  EXPECT_EQ(n, 2);
}

TEST(OutputRoot, Precedence) {
  ::setenv(kOutputRootEnv, "/tmp/from-env", 1);
  EXPECT_EQ(default_output_root("cfg"), fs::path("cfg"));
  EXPECT_EQ(default_output_root(""), fs::path("/tmp/from-env"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(default_output_root(""), fs::path("runs"));
}

TEST(Datasets, PresetsAndDirectories) {
  EXPECT_TRUE(resolves_to_labeled("synthetic-source"));
  EXPECT_EQ(resolve_labeled("synthetic-target", 3, 2).size(), 2u);
  EXPECT_THROW(resolve_labeled("no-such-thing", 0, 1), ConfigError);
  TempDir dir("ds");
  fs::create_directories(dir / "images");
  EXPECT_THROW(resolve_labeled((dir / "").string(), 0, 1), ConfigError);
}

}  // namespace
}  // namespace mcda
