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

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcda/imaging.hpp"
#include "mcda/network.hpp"
#include "mcda/planes.hpp"

namespace mcda {

// Foreground pixels with a 4-connected background neighbor; out-of-bounds
// counts as background.
struct SurfaceSet {
  std::vector<std::pair<int, int>> points;  // (row, col)
};

// 2|A & B| / (|A| + |B|) on single-channel binary masks; 1.0 when both are
// empty.
double dice_score(const Planes& pred, const Planes& truth);

SurfaceSet extract_surface(const Planes& mask);

// Symmetric average surface distance in pixels; nullopt when either surface
// is empty.
std::optional<double> asd(const Planes& pred, const Planes& truth);

// Exact Euclidean distance from every pixel to the nearest listed point.
std::vector<double> distance_to_points(const SurfaceSet& points, int height,
                                       int width);

struct ClassMetrics {
  std::string name;
  double dice_mean = 0.0;  // percent
  double dice_std = 0.0;
  double asd_mean = 0.0;  // pixels, over images with a defined ASD
  double asd_std = 0.0;
  std::size_t asd_excluded = 0;
  std::vector<double> dice_per_image;               // fraction in [0,1]
  std::vector<std::optional<double>> asd_per_image;
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> classes;  // indexed by kDisc / kCup
  std::size_t sample_count = 0;
  double avg_dice() const;
  double avg_asd() const;
};

// Population standard deviation; 0 for fewer than two values.
std::pair<double, double> mean_std(const std::vector<double>& values);

// Aggregates already-thresholded predictions (2 x H x W) against truth.
MetricsReport score_predictions(const std::vector<Planes>& predictions,
                                const std::vector<Planes>& truths);

// Thresholds seg_probs of every image and scores against the ground truth.
MetricsReport evaluate(const ModelParams& params,
                       const std::vector<AnnotatedSample>& labeled_set,
                       double threshold = 0.5);

// Aligned text table with one row per labelled report, columns
// "Optic disc segmentation | Optic cup segmentation | Avg".
std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace mcda
