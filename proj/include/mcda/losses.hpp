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

#include <optional>
#include <string>
#include <vector>

#include "mcda/imaging.hpp"
#include "mcda/network.hpp"
#include "mcda/planes.hpp"

namespace mcda {

// Clamp applied to probabilities inside every log term.
inline constexpr double kProbEps = 1e-7;
inline constexpr double kDiceSmooth = 1.0;
inline constexpr double kNormEps = 1e-8;

struct LossWeights {
  double alpha = 100.0;  // boundary consistency
  double beta = 1.0;     // feature consistency
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// Boundary-head objective schedule: BCE for the first ce_epochs epochs, Dice
// for the following dice_epochs.
struct BoundaryScheduleConfig {
  int ce_epochs = 1000;
  int dice_epochs = 200;

  int total() const { return ce_epochs + dice_epochs; }
  // Splits `total_epochs` in the 1000:200 (5:1) proportion.
  static BoundaryScheduleConfig scaled(int total_epochs);
};

// A loss value together with its gradient with respect to the prediction.
struct LossGrad {
  double value = 0.0;
  Planes grad;
};

// Mean binary cross-entropy over every element.
double bce_loss(const Planes& pred, const Planes& target);
LossGrad bce_loss_grad(const Planes& pred, const Planes& target);

// Mean of -t*log(p) only.
LossGrad positive_ce_loss_grad(const Planes& pred, const Planes& target);

// 1 - (2*sum(p*t) + 1) / (sum(p) + sum(t) + 1) per channel, averaged over
// channels.
double dice_loss(const Planes& pred, const Planes& target);
LossGrad dice_loss_grad(const Planes& pred, const Planes& target);

enum class BoundaryLossKind { kBce, kDice };
std::string to_string(BoundaryLossKind kind);

struct SourceLoss {
  double seg = 0.0;
  double boundary = 0.0;
  BoundaryLossKind boundary_kind = BoundaryLossKind::kBce;
  double total() const { return seg + boundary; }
  OutputGrad grad;
};

// Segmentation BCE plus the scheduled boundary term. Throws ConfigError when
// `epoch` is past the schedule.
SourceLoss source_loss(const ModelOutput& output, const AnnotatedSample& sample,
                       int epoch, const BoundaryScheduleConfig& schedule);

// Mean squared difference between the boundary head and the Sobel boundary of
// the segmentation; gradients reach both inputs.
struct BoundaryConsistency {
  double value = 0.0;
  Planes grad_boundary;
  Planes grad_seg;
};
double boundary_consistency_loss(const Planes& boundary_probs,
                                 const Planes& seg_probs);
BoundaryConsistency boundary_consistency_loss_grad(const Planes& boundary_probs,
                                                   const Planes& seg_probs);

struct Prototype {
  std::vector<double> vector;
  std::size_t pixel_count = 0;
};

// Mean feature vector over nonzero pixels of `mask` (1 x H x W); nullopt for
// an empty mask.
std::optional<Prototype> compute_prototype(const Planes& features,
                                           const Planes& mask);

double cosine_distance(const Prototype& a, const Prototype& b);
// d cosine_distance / d a.
std::vector<double> cosine_distance_grad(const Prototype& a,
                                         const Prototype& b);

// Binary mask (1 x H x W) of probs[channel] > threshold.
Planes threshold_channel(const Planes& probs, int channel, double threshold);

struct FeatureConsistency {
  double value = 0.0;
  double cup = 0.0;
  double disc = 0.0;
  Planes grad_features_orig;
  Planes grad_features_swapped;
};

// Cosine distance of cup prototypes plus cosine distance of disc prototypes
// between the original and the background-swapped view. Prototype masks are
// each view's own seg_probs > threshold, held constant.
double feature_consistency_loss(const ModelOutput& orig,
                                const ModelOutput& swapped, double threshold);
FeatureConsistency feature_consistency_loss_grad(const ModelOutput& orig,
                                                 const ModelOutput& swapped,
                                                 double threshold);

// Pseudo-label segmentation loss. Full BCE unless positive_only, which keeps
// only the -p*log(y) term.
double pseudo_label_loss(const Planes& seg_probs, const Planes& pseudo,
                         bool positive_only = false);
LossGrad pseudo_label_loss_grad(const Planes& seg_probs, const Planes& pseudo,
                                bool positive_only = false);

struct AdaptationLossParts {
  double tseg = 0.0;
  double bc = 0.0;
  double fc = 0.0;
};

void validate_weights(const LossWeights& w);
double total_adaptation_loss(const AdaptationLossParts& parts,
                             const LossWeights& weights);

}  // namespace mcda
