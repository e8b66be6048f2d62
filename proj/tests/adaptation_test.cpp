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

#include "mcda/adaptation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mcda/errors.hpp"
#include "test_support.hpp"

namespace mcda {
namespace {

PretrainConfig quick_pretrain(std::uint64_t seed = 0) {
  PretrainConfig c;
  c.schedule = {2, 1};
  c.seed = seed;
  return c;
}

// Shared tiny source model so each test does not retrain.
class AdaptationTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    source_ = new std::vector<AnnotatedSample>(synth_dataset(synthetic_source_preset(), 16, 0));
    target_ = new std::vector<AnnotatedSample>(synth_dataset(synthetic_target_preset(), 6, 1));
    params_ = new ModelParams(pretrain(*source_, ArchConfig{}, quick_pretrain()).params);
  }
  static void TearDownTestSuite() {
    delete source_;
    delete target_;
    delete params_;
  }

  static std::vector<Planes> target_images() {
    std::vector<Planes> out;
    for (const auto& s : *target_) out.push_back(s.image);
    return out;
  }

  static AdaptationConfig quick_adapt(int epochs = 2) {
    AdaptationConfig c;
    c.epochs = epochs;
    c.batch_size = 3;
    return c;
  }

  static std::vector<AnnotatedSample>* source_;
  static std::vector<AnnotatedSample>* target_;
  static ModelParams* params_;
};

std::vector<AnnotatedSample>* AdaptationTest::source_ = nullptr;
std::vector<AnnotatedSample>* AdaptationTest::target_ = nullptr;
ModelParams* AdaptationTest::params_ = nullptr;

TEST_F(AdaptationTest, PretrainScheduleAndDeterminism) {
  const std::vector<AnnotatedSample> small(source_->begin(), source_->begin() + 4);
  const TrainResult a = pretrain(small, ArchConfig{}, quick_pretrain(5));
  const TrainResult b = pretrain(small, ArchConfig{}, quick_pretrain(5));
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.record.epochs.size(), 3u);
  EXPECT_EQ(a.record.epochs[0].boundary_kind, "bce");
  EXPECT_EQ(a.record.epochs[1].boundary_kind, "bce");
  EXPECT_EQ(a.record.epochs[2].boundary_kind, "dice");

  PretrainConfig dice_only = quick_pretrain();
  dice_only.schedule = {0, 2};
  for (const auto& e : pretrain(small, ArchConfig{}, dice_only).record.epochs) {
    EXPECT_EQ(e.boundary_kind, "dice");
  }
}

TEST_F(AdaptationTest, PretrainRejectsEmptyDataset) {
  EXPECT_THROW(pretrain({}, ArchConfig{}, quick_pretrain()), ConfigError);
}

TEST_F(AdaptationTest, PseudoLabelsAreDeterministicAndSelfConsistent) {
  const auto images = target_images();
  const auto a = generate_pseudo_labels(*params_, images);
  const auto b = generate_pseudo_labels(*params_, images);
  ASSERT_EQ(a.size(), images.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hard, b[i].hard);
    EXPECT_EQ(a[i].soft, b[i].soft);
  }
  // Pseudo labels on the training images score exactly as the model does.
  std::vector<Planes> train_images;
  std::vector<Planes> truths;
  for (const auto& s : *source_) {
    train_images.push_back(s.image);
    truths.push_back(s.mask);
  }
  std::vector<Planes> hard;
  for (const auto& p : generate_pseudo_labels(*params_, train_images)) hard.push_back(p.hard);
  const MetricsReport from_labels = score_predictions(hard, truths);
  const MetricsReport model = evaluate(*params_, *source_);
  EXPECT_GE(from_labels.avg_dice(), model.avg_dice() - 2.0);
}

TEST_F(AdaptationTest, EmptyForegroundIsFlaggedAndSkipsTheSwap) {
  PseudoLabel empty{Planes(2, 64, 64), Planes(2, 64, 64), "test"};
  EXPECT_TRUE(empty.empty_disc());
  const auto images = target_images();
  std::vector<PseudoLabel> labels(images.size(), empty);
  const TrainResult r = adapt(*params_, images, labels, quick_adapt(1));
  EXPECT_EQ(r.record.epochs[0].losses.at("swapped_pairs"), 0.0);
  EXPECT_EQ(r.record.epochs[0].losses.at("L_fc"), 0.0);
}

TEST_F(AdaptationTest, ZeroEpochsAndZeroLearningRateAreNoOps) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  EXPECT_EQ(adapt(*params_, images, labels, quick_adapt(0)).params, *params_);
  AdaptationConfig still = quick_adapt(2);
  still.weights = {0, 0};
  still.adam.lr = 0.0;
  EXPECT_EQ(adapt(*params_, images, labels, still).params, *params_);
}

TEST_F(AdaptationTest, FrozenSourceAndPseudoLabels) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  const auto labels_copy = labels;
  const auto source_bytes = serialize_params(*params_);
  const SegNet net(params_->arch);
  const ModelOutput before = net.forward(*params_, images[0]);
  TrainOptions opts;
  int checked = 0;
  opts.on_epoch = [&](const EpochRecord&) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ASSERT_EQ(labels[i].hard, labels_copy[i].hard);
      ASSERT_EQ(labels[i].soft, labels_copy[i].soft);
    }
    ++checked;
  };
  const TrainResult r = adapt(*params_, images, labels, quick_adapt(2), opts);
  EXPECT_EQ(checked, 2);
  EXPECT_NE(r.params, *params_);
  EXPECT_EQ(serialize_params(*params_), source_bytes);
  EXPECT_EQ(net.forward(*params_, images[0]).seg_probs, before.seg_probs);
}

TEST_F(AdaptationTest, RecordsAreDeterministicAndFinite) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  TrainOptions opts;
  opts.eval_set = *target_;
  const TrainResult a = adapt(*params_, images, labels, quick_adapt(2), opts);
  const TrainResult b = adapt(*params_, images, labels, quick_adapt(2), opts);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.record.epochs.size(), 2u);
  ASSERT_TRUE(a.record.initial_metrics.has_value());
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.record.epochs[e].losses, b.record.epochs[e].losses);
    for (const auto& [k, v] : a.record.epochs[e].losses) {
      EXPECT_TRUE(std::isfinite(v)) << k;
      EXPECT_GE(v, 0.0) << k;
    }
    ASSERT_TRUE(a.record.epochs[e].metrics.has_value());
  }
  for (const char* key : {"L_Tseg", "L_bc", "L_fc", "alpha_L_bc", "beta_L_fc", "total"}) {
    EXPECT_TRUE(a.record.epochs[0].losses.count(key)) << key;
  }
  const auto& l = a.record.epochs[0].losses;
  EXPECT_NEAR(l.at("total"), l.at("L_Tseg") + 100 * l.at("L_bc") + l.at("L_fc"), 1e-9);
}

TEST_F(AdaptationTest, ZeroWeightsContributeNothing) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  AdaptationConfig c = quick_adapt(1);
  c.weights = {0, 0};
  const TrainResult r = adapt(*params_, images, labels, c);
  const auto& l = r.record.epochs[0].losses;
  EXPECT_EQ(l.at("alpha_L_bc"), 0.0);
  EXPECT_EQ(l.at("beta_L_fc"), 0.0);
  EXPECT_EQ(l.at("total"), l.at("L_Tseg"));
}

TEST_F(AdaptationTest, OversizedBatchIsClampedWithWarning) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  AdaptationConfig c = quick_adapt(1);
  c.batch_size = 50;
  const TrainResult r = adapt(*params_, images, labels, c);
  ASSERT_EQ(r.record.warnings.size(), 1u);
  EXPECT_NE(r.record.warnings[0].find("clamped"), std::string::npos);
}

TEST_F(AdaptationTest, NonFiniteLossNamesEpochAndBatch) {
  ModelParams broken = *params_;
  const auto [lo, hi] = SegNet(broken.arch).seg_head_range();
  for (std::size_t i = lo; i < hi; ++i) broken.values[i] = std::numeric_limits<float>::quiet_NaN();
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  try {
    adapt(broken, images, labels, quick_adapt(1));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 0"), std::string::npos) << msg;
  }
}

TEST_F(AdaptationTest, InvalidConfigIsRejected) {
  const auto images = target_images();
  const auto labels = generate_pseudo_labels(*params_, images);
  AdaptationConfig c = quick_adapt(1);
  c.weights.alpha = -1;
  EXPECT_THROW(adapt(*params_, images, labels, c), ConfigError);
  c = quick_adapt(1);
  c.optimizer = "sgd";
  EXPECT_THROW(adapt(*params_, images, labels, c), ConfigError);
  EXPECT_THROW(adapt(*params_, images, {}, quick_adapt(1)), Error);
}

TEST_F(AdaptationTest, AblationTableHasFourRows) {
  const std::vector<AnnotatedSample> test(target_->begin(), target_->begin() + 3);
  const AblationTable t = ablation_suite(*params_, test, quick_adapt(1), Sweep::kNone);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(t.alpha_sweep.empty());
  EXPECT_TRUE(t.beta_sweep.empty());
  const bool expect[4][3] = {{true, false, false}, {true, true, false}, {true, false, true},
                             {true, true, true}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(t.rows[i].losses.tseg, expect[i][0]);
    EXPECT_EQ(t.rows[i].losses.bc, expect[i][1]);
    EXPECT_EQ(t.rows[i].losses.fc, expect[i][2]);
  }
  const std::string text = format_ablation_table(t);
  int data_rows = 0;
  for (std::size_t pos = 0; (pos = text.find("\nyes", pos)) != std::string::npos; ++pos) ++data_rows;
  EXPECT_EQ(data_rows, 4);
  EXPECT_NE(text.find("L_Tseg"), std::string::npos);
  EXPECT_NE(text.find("Optic disc segmentation"), std::string::npos);
}

TEST_F(AdaptationTest, SweepGridsAndTables) {
  EXPECT_EQ(kAlphaGrid, (std::vector<double>{0.1, 0.5, 1, 10, 50, 100, 150, 200}));
  EXPECT_EQ(kBetaGrid, (std::vector<double>{0.1, 0.2, 0.5, 1, 2, 3, 4, 5}));
  EXPECT_EQ(parse_sweep("none"), Sweep::kNone);
  EXPECT_EQ(parse_sweep("both"), Sweep::kBoth);
  EXPECT_THROW(parse_sweep("gamma"), ConfigError);

  const std::vector<AnnotatedSample> test(target_->begin(), target_->begin() + 2);
  AdaptationConfig c = quick_adapt(1);
  c.epochs = 0;
  const AblationTable t = ablation_suite(*params_, test, c, Sweep::kAlpha);
  ASSERT_EQ(t.alpha_sweep.size(), 8u);
  EXPECT_TRUE(t.beta_sweep.empty());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(t.alpha_sweep[i].value, kAlphaGrid[i]);
  const std::string s = format_sweep_table("alpha", t.alpha_sweep);
  for (const char* v : {"0.1", "0.5", "10", "50", "100", "150", "200", "Optic disc[%]",
                        "Optic cup[%]", "Avg[%]"}) {
    EXPECT_NE(s.find(v), std::string::npos) << v;
  }
}

}  // namespace
}  // namespace mcda
