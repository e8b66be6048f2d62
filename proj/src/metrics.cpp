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

#include "mcda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mcda {
namespace {

void require_binary_plane(const Planes& m, const char* what) {
  if (m.channels() != 1) {
    throw ShapeError(std::string(what) + ": expected a single-channel mask, got " +
                     m.shape_string());
  }
}

// Stand-in for "no site" in the squared-distance grid; far above any real
// squared distance yet small enough that q^2 terms stay exact.
constexpr double kFar = 1e12;

// Felzenszwalb-Huttenlocher lower envelope of parabolas, in place.
void squared_edt_1d(std::vector<double>& f, std::vector<int>& v,
                    std::vector<double>& z, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = double(q - p) * (q - p) + f[p];
  }
  std::copy(d.begin(), d.begin() + n, f.begin());
}

}  // namespace

double dice_score(const Planes& pred, const Planes& truth) {
  require_binary_plane(pred, "dice_score");
  require_same_shape(pred, truth, "dice_score");
  std::size_t inter = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] != 0.0, t = truth.data()[i] != 0.0;
    a += p;
    b += t;
    inter += p && t;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

SurfaceSet extract_surface(const Planes& mask) {
  require_binary_plane(mask, "extract_surface");
  const int H = mask.height(), W = mask.width();
  auto fg = [&](int y, int x) {
    return y >= 0 && y < H && x >= 0 && x < W && mask.at(0, y, x) != 0.0;
  };
  SurfaceSet s;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!fg(y, x)) continue;
      if (!fg(y - 1, x) || !fg(y + 1, x) || !fg(y, x - 1) || !fg(y, x + 1)) {
        s.points.emplace_back(y, x);
      }
    }
  }
  return s;
}

std::vector<double> distance_to_points(const SurfaceSet& points, int height,
                                       int width) {
  std::vector<double> grid(static_cast<std::size_t>(height) * width, kFar);
  for (auto [y, x] : points.points) grid[static_cast<std::size_t>(y) * width + x] = 0.0;
  const int n = std::max(height, width);
  std::vector<double> f, d(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  for (int x = 0; x < width; ++x) {
    f.assign(height, 0.0);
    for (int y = 0; y < height; ++y) f[y] = grid[static_cast<std::size_t>(y) * width + x];
    squared_edt_1d(f, v, z, d);
    for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = f[y];
  }
  for (int y = 0; y < height; ++y) {
    f.assign(grid.begin() + static_cast<std::size_t>(y) * width,
             grid.begin() + static_cast<std::size_t>(y + 1) * width);
    squared_edt_1d(f, v, z, d);
    std::copy(f.begin(), f.end(), grid.begin() + static_cast<std::size_t>(y) * width);
  }
  for (double& g : grid) g = g >= kFar / 2 ? std::numeric_limits<double>::infinity() : std::sqrt(g);
  return grid;
}

std::optional<double> asd(const Planes& pred, const Planes& truth) {
  require_binary_plane(pred, "asd");
  require_same_shape(pred, truth, "asd");
  const SurfaceSet sp = extract_surface(pred);
  const SurfaceSet st = extract_surface(truth);
  if (sp.points.empty() || st.points.empty()) return std::nullopt;
  const int H = pred.height(), W = pred.width();
  const auto to_truth = distance_to_points(st, H, W);
  const auto to_pred = distance_to_points(sp, H, W);
  double sum = 0.0;
  for (auto [y, x] : sp.points) sum += to_truth[static_cast<std::size_t>(y) * W + x];
  for (auto [y, x] : st.points) sum += to_pred[static_cast<std::size_t>(y) * W + x];
  return sum / static_cast<double>(sp.points.size() + st.points.size());
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

double MetricsReport::avg_dice() const {
  double s = 0.0;
  for (const auto& c : classes) s += c.dice_mean;
  return s / kNumClasses;
}

double MetricsReport::avg_asd() const {
  double s = 0.0;
  int n = 0;
  for (const auto& c : classes) {
    if (c.asd_excluded < c.asd_per_image.size() || c.asd_per_image.empty()) {
      s += c.asd_mean;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : s / n;
}

MetricsReport score_predictions(const std::vector<Planes>& predictions,
                                const std::vector<Planes>& truths) {
  if (predictions.size() != truths.size()) {
    throw ShapeError("score_predictions: prediction and truth counts differ");
  }
  MetricsReport r;
  r.sample_count = predictions.size();
  r.classes[kDisc].name = "Optic disc segmentation";
  r.classes[kCup].name = "Optic cup segmentation";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    require_same_shape(predictions[i], truths[i], "score_predictions");
    for (int c = 0; c < kNumClasses; ++c) {
      const Planes p = predictions[i].channel(c);
      const Planes t = truths[i].channel(c);
      r.classes[c].dice_per_image.push_back(dice_score(p, t));
      r.classes[c].asd_per_image.push_back(asd(p, t));
    }
  }
  for (auto& cm : r.classes) {
    std::vector<double> dice_pct, asd_vals;
    for (double d : cm.dice_per_image) dice_pct.push_back(100.0 * d);
    for (const auto& a : cm.asd_per_image) {
      if (a) {
        asd_vals.push_back(*a);
      } else {
        ++cm.asd_excluded;
      }
    }
    std::tie(cm.dice_mean, cm.dice_std) = mean_std(dice_pct);
    std::tie(cm.asd_mean, cm.asd_std) = mean_std(asd_vals);
  }
  return r;
}

MetricsReport evaluate(const ModelParams& params,
                       const std::vector<AnnotatedSample>& labeled_set,
                       double threshold) {
  SegNet net(params.arch);
  std::vector<Planes> preds, truths;
  preds.reserve(labeled_set.size());
  for (const auto& s : labeled_set) {
    const ModelOutput out = net.forward(params, s.image);
    Planes pred(out.seg_probs.channels(), out.seg_probs.height(), out.seg_probs.width());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred.data()[i] = out.seg_probs.data()[i] > threshold ? 1.0 : 0.0;
    }
    preds.push_back(std::move(pred));
    truths.push_back(s.mask);
  }
  return score_predictions(preds, truths);
}

std::string format_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t label_w = 6;
  for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());
  constexpr int cell = 15;
  char buf[256];
  std::string out;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out += pad("Method", label_w) + " | " + pad("Optic disc segmentation", 2 * cell + 3) + " | " +
         pad("Optic cup segmentation", 2 * cell + 3) + " | Avg\n";
  out += pad("", label_w) + " | ";
  for (int c = 0; c < kNumClasses; ++c) {
    out += pad("Dice [%]", cell) + " | " + pad("ASD (pixel)", cell) + " | ";
  }
  out += pad("Dice [%]", 8) + " | ASD (pixel)\n";
  out += std::string(label_w + 3 + 4 * (cell + 3) + 8 + 14, '-') + "\n";
  for (const auto& [label, r] : rows) {
    out += pad(label, label_w) + " | ";
    for (int c = 0; c < kNumClasses; ++c) {
      const auto& cm = r.classes[c];
      std::snprintf(buf, sizeof(buf), "%6.2f +- %5.2f", cm.dice_mean, cm.dice_std);
      out += pad(buf, cell) + " | ";
      if (!cm.asd_per_image.empty() && cm.asd_excluded == cm.asd_per_image.size()) {
        std::snprintf(buf, sizeof(buf), "%6s", "n/a");
      } else {
        std::snprintf(buf, sizeof(buf), "%6.2f +- %5.2f", cm.asd_mean, cm.asd_std);
      }
      out += pad(buf, cell) + " | ";
    }
    const double a = r.avg_asd();
    if (std::isnan(a)) {
      std::snprintf(buf, sizeof(buf), "%8.2f | n/a", r.avg_dice());
    } else {
      std::snprintf(buf, sizeof(buf), "%8.2f | %.2f", r.avg_dice(), a);
    }
    out += buf;
    out += "\n";
  }
  for (const auto& [label, r] : rows) {
    const auto& d = r.classes[kDisc];
    const auto& c = r.classes[kCup];
    if (d.asd_excluded + c.asd_excluded == 0) continue;
    std::snprintf(buf, sizeof(buf),
                  "%s: ASD excludes %zu disc and %zu cup images with an empty surface\n",
                  label.c_str(), d.asd_excluded, c.asd_excluded);
    out += buf;
  }
  return out;
}

}  // namespace mcda
