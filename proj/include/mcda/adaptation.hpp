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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcda/imaging.hpp"
#include "mcda/losses.hpp"
#include "mcda/metrics.hpp"
#include "mcda/network.hpp"

namespace mcda {

// Frozen source-model prediction on one target image.
struct PseudoLabel {
  Planes hard;  // soft > threshold
  Planes soft;
  std::string source;

  // No disc foreground: background replacement is skipped for this image.
  bool empty_disc() const;
};

struct PretrainConfig {
  BoundaryScheduleConfig schedule{25, 5};
  AdamConfig optimizer{};
  int batch_size = 8;
  bool augment = true;
  AugmentConfig augment_config{};
  std::uint64_t seed = 0;
  // Write a checkpoint every this many epochs (0: final only).
  int checkpoint_every = 0;
};

struct AdaptationConfig {
  LossWeights weights{};
  std::string optimizer = "adam";
  AdamConfig adam{};  // lr lives here; default 1e-3
  int batch_size = 8;
  int epochs = 10;
  double seg_threshold = 0.5;     // prototype masks
  double pseudo_threshold = 0.5;  // hard pseudo labels
  bool soft_pseudo_labels = false;
  bool tseg_positive_only = false;
  std::uint64_t seed = 0;

  double lr() const { return adam.lr; }
};

void validate(const PretrainConfig& c);
void validate(const AdaptationConfig& c);

// Per-epoch log entry. Loss components are batch means averaged over the
// epoch's batches.
struct EpochRecord {
  int epoch = 0;
  std::map<std::string, double> losses;
  std::string boundary_kind;  // pretraining only
  std::optional<MetricsReport> metrics;
  std::string checkpoint;
};

struct RunRecord {
  std::string kind;  // "pretrain" | "adapt"
  std::string config_json;
  std::vector<EpochRecord> epochs;
  // Metrics before any update (adaptation with an evaluation set only).
  std::optional<MetricsReport> initial_metrics;
  std::vector<std::string> checkpoints;
  std::vector<std::string> warnings;
  double wall_clock_seconds = 0.0;
};

struct TrainOptions {
  // Evaluated after every epoch when non-empty.
  std::vector<AnnotatedSample> eval_set;
  // Checkpoints go here when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  // Called after each epoch's record is complete.
  std::function<void(const EpochRecord&)> on_epoch;
  bool verbose = false;
};

struct TrainResult {
  ModelParams params;
  RunRecord record;
};

TrainResult pretrain(const std::vector<AnnotatedSample>& source_dataset,
                     const ArchConfig& arch, const PretrainConfig& config,
                     const TrainOptions& options = {});

std::vector<PseudoLabel> generate_pseudo_labels(
    const ModelParams& source_params, const std::vector<Planes>& test_images,
    double threshold = 0.5, const std::string& source_id = "source");

// Test-time adaptation of a copy of source_params on the unlabeled test
// images. source_params and pseudo_labels are never modified.
TrainResult adapt(const ModelParams& source_params,
                  const std::vector<Planes>& test_images,
                  const std::vector<PseudoLabel>& pseudo_labels,
                  const AdaptationConfig& config,
                  const TrainOptions& options = {});

// ---- ablations ----

struct LossSelection {
  bool tseg = true;
  bool bc = true;
  bool fc = true;
};

struct AblationRow {
  LossSelection losses;
  MetricsReport metrics;
  RunRecord record;
};

struct SweepPoint {
  double value = 0.0;
  MetricsReport metrics;
};

enum class Sweep { kNone, kAlpha, kBeta, kBoth };
Sweep parse_sweep(const std::string& name);

inline const std::vector<double> kAlphaGrid{0.1, 0.5, 1, 10, 50, 100, 150, 200};
inline const std::vector<double> kBetaGrid{0.1, 0.2, 0.5, 1, 2, 3, 4, 5};

struct AblationTable {
  MetricsReport baseline;  // source model, no adaptation
  std::vector<AblationRow> rows;
  // Alpha sweep runs {L_Tseg, L_bc}; beta sweep runs {L_Tseg, L_fc}.
  std::vector<SweepPoint> alpha_sweep;
  std::vector<SweepPoint> beta_sweep;
};

// The four loss combinations {Tseg}, {Tseg,bc}, {Tseg,fc}, {Tseg,bc,fc} with
// the configured alpha/beta, plus the optional weight sweeps.
AblationTable ablation_suite(const ModelParams& source_params,
                             const std::vector<AnnotatedSample>& test_set,
                             const AdaptationConfig& config, Sweep sweep,
                             const TrainOptions& options = {});

std::string format_ablation_table(const AblationTable& table);
std::string format_sweep_table(const std::string& symbol,
                               const std::vector<SweepPoint>& sweep);

}  // namespace mcda
