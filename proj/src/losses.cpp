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

#include "mcda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcda/boundary.hpp"

namespace mcda {
namespace {

bool clamped(double p) { return p < kProbEps || p > 1.0 - kProbEps; }
double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

BoundaryScheduleConfig BoundaryScheduleConfig::scaled(int total_epochs) {
  if (total_epochs < 0) throw ConfigError("epoch count must be >= 0");
  const int dice = static_cast<int>(std::lround(total_epochs / 6.0));
  return {total_epochs - dice, dice};
}

double bce_loss(const Planes& pred, const Planes& target) {
  return bce_loss_grad(pred, target).value;
}

LossGrad bce_loss_grad(const Planes& pred, const Planes& target) {
  require_same_shape(pred, target, "bce_loss");
  LossGrad out{0.0, Planes(pred.channels(), pred.height(), pred.width())};
  const double n = static_cast<double>(pred.size());
  if (n == 0) return out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = clamp_prob(pred.data()[i]);
    const double t = target.data()[i];
    out.value -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (!clamped(pred.data()[i])) {
      out.grad.data()[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
    }
  }
  out.value /= n;
  return out;
}

LossGrad positive_ce_loss_grad(const Planes& pred, const Planes& target) {
  require_same_shape(pred, target, "positive_ce_loss");
  LossGrad out{0.0, Planes(pred.channels(), pred.height(), pred.width())};
  const double n = static_cast<double>(pred.size());
  if (n == 0) return out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = clamp_prob(pred.data()[i]);
    const double t = target.data()[i];
    out.value -= t * std::log(p);
    if (!clamped(pred.data()[i])) out.grad.data()[i] = -t / p / n;
  }
  out.value /= n;
  return out;
}

double dice_loss(const Planes& pred, const Planes& target) {
  return dice_loss_grad(pred, target).value;
}

LossGrad dice_loss_grad(const Planes& pred, const Planes& target) {
  require_same_shape(pred, target, "dice_loss");
  LossGrad out{0.0, Planes(pred.channels(), pred.height(), pred.width())};
  const int C = pred.channels();
  if (C == 0) return out;
  for (int c = 0; c < C; ++c) {
    auto p = pred.plane(c);
    auto t = target.plane(c);
    double inter = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      inter += p[i] * t[i];
      sum += p[i] + t[i];
    }
    const double num = 2.0 * inter + kDiceSmooth;
    const double den = sum + kDiceSmooth;
    out.value += 1.0 - num / den;
    auto g = out.grad.plane(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      g[i] = -(2.0 * t[i] * den - num) / (den * den) / C;
    }
  }
  out.value /= C;
  return out;
}

std::string to_string(BoundaryLossKind kind) {
  return kind == BoundaryLossKind::kBce ? "bce" : "dice";
}

SourceLoss source_loss(const ModelOutput& output, const AnnotatedSample& sample,
                       int epoch, const BoundaryScheduleConfig& schedule) {
  if (epoch < 0 || epoch >= schedule.total()) {
    throw ConfigError("epoch " + std::to_string(epoch) +
                      " is outside the boundary schedule of " +
                      std::to_string(schedule.total()) + " epochs");
  }
  SourceLoss out;
  LossGrad seg = bce_loss_grad(output.seg_probs, sample.mask);
  out.boundary_kind = epoch < schedule.ce_epochs ? BoundaryLossKind::kBce
                                                 : BoundaryLossKind::kDice;
  LossGrad bnd = out.boundary_kind == BoundaryLossKind::kBce
                     ? bce_loss_grad(output.boundary_probs, sample.boundary)
                     : dice_loss_grad(output.boundary_probs, sample.boundary);
  out.seg = seg.value;
  out.boundary = bnd.value;
  out.grad.seg_probs = std::move(seg.grad);
  out.grad.boundary_probs = std::move(bnd.grad);
  return out;
}

double boundary_consistency_loss(const Planes& boundary_probs,
                                 const Planes& seg_probs) {
  require_same_shape(boundary_probs, seg_probs, "boundary_consistency_loss");
  const Planes soft = soft_boundary(seg_probs);
  double acc = 0.0;
  for (std::size_t i = 0; i < soft.size(); ++i) {
    const double d = boundary_probs.data()[i] - soft.data()[i];
    acc += d * d;
  }
  return soft.size() ? acc / static_cast<double>(soft.size()) : 0.0;
}

BoundaryConsistency boundary_consistency_loss_grad(const Planes& boundary_probs,
                                                   const Planes& seg_probs) {
  require_same_shape(boundary_probs, seg_probs, "boundary_consistency_loss");
  const Planes soft = soft_boundary(seg_probs);
  const double n = static_cast<double>(soft.size());
  BoundaryConsistency out;
  out.grad_boundary = Planes(soft.channels(), soft.height(), soft.width());
  Planes d_soft(soft.channels(), soft.height(), soft.width());
  for (std::size_t i = 0; i < soft.size(); ++i) {
    const double d = boundary_probs.data()[i] - soft.data()[i];
    out.value += d * d;
    out.grad_boundary.data()[i] = 2.0 * d / n;
    d_soft.data()[i] = -2.0 * d / n;
  }
  out.value /= n;
  out.grad_seg = soft_boundary_backward(seg_probs, d_soft);
  return out;
}

std::optional<Prototype> compute_prototype(const Planes& features,
                                           const Planes& mask) {
  if (mask.channels() != 1 || mask.height() != features.height() ||
      mask.width() != features.width()) {
    throw ShapeError("compute_prototype: mask " + mask.shape_string() +
                     " does not align with features " +
                     features.shape_string());
  }
  Prototype proto{std::vector<double>(features.channels(), 0.0), 0};
  auto m = mask.plane(0);
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] == 0.0) continue;
    ++proto.pixel_count;
    for (int c = 0; c < features.channels(); ++c) {
      proto.vector[c] += features.plane(c)[j];
    }
  }
  if (proto.pixel_count == 0) return std::nullopt;
  for (double& v : proto.vector) v /= static_cast<double>(proto.pixel_count);
  return proto;
}

double cosine_distance(const Prototype& a, const Prototype& b) {
  if (a.vector.size() != b.vector.size()) {
    throw ShapeError("cosine_distance: prototype lengths differ");
  }
  const double na = std::max(norm(a.vector), kNormEps);
  const double nb = std::max(norm(b.vector), kNormEps);
  const double dot =
      std::inner_product(a.vector.begin(), a.vector.end(), b.vector.begin(), 0.0);
  return 1.0 - dot / (na * nb);
}

std::vector<double> cosine_distance_grad(const Prototype& a, const Prototype& b) {
  const double na_raw = norm(a.vector);
  const double na = std::max(na_raw, kNormEps);
  const double nb = std::max(norm(b.vector), kNormEps);
  const double dot =
      std::inner_product(a.vector.begin(), a.vector.end(), b.vector.begin(), 0.0);
  std::vector<double> g(a.vector.size());
  // The norm guard is constant below kNormEps, so only the dot term remains.
  const bool guarded = na_raw < kNormEps;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = -b.vector[i] / (na * nb);
    if (!guarded) g[i] += dot * a.vector[i] / (na * na * na * nb);
  }
  return g;
}

Planes threshold_channel(const Planes& probs, int channel, double threshold) {
  Planes m(1, probs.height(), probs.width());
  auto src = probs.plane(channel);
  auto dst = m.plane(0);
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > threshold ? 1.0 : 0.0;
  return m;
}

namespace {

// Adds d(loss)/d(prototype) spread over the mask pixels into grad_features.
void scatter_prototype_grad(const std::vector<double>& g_proto, const Planes& mask,
                            std::size_t count, Planes& grad_features) {
  auto m = mask.plane(0);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] == 0.0) continue;
    for (int c = 0; c < grad_features.channels(); ++c) {
      grad_features.plane(c)[j] += g_proto[c] * inv;
    }
  }
}

}  // namespace

double feature_consistency_loss(const ModelOutput& orig, const ModelOutput& swapped,
                                double threshold) {
  return feature_consistency_loss_grad(orig, swapped, threshold).value;
}

FeatureConsistency feature_consistency_loss_grad(const ModelOutput& orig,
                                                 const ModelOutput& swapped,
                                                 double threshold) {
  require_same_shape(orig.features, swapped.features, "feature_consistency_loss");
  FeatureConsistency out;
  const auto& f = orig.features;
  out.grad_features_orig = Planes(f.channels(), f.height(), f.width());
  out.grad_features_swapped = Planes(f.channels(), f.height(), f.width());
  for (int cls : {kCup, kDisc}) {
    const Planes m_o = threshold_channel(orig.seg_probs, cls, threshold);
    const Planes m_s = threshold_channel(swapped.seg_probs, cls, threshold);
    auto p_o = compute_prototype(orig.features, m_o);
    auto p_s = compute_prototype(swapped.features, m_s);
    if (!p_o || !p_s) continue;
    const double d = cosine_distance(*p_o, *p_s);
    (cls == kCup ? out.cup : out.disc) = d;
    out.value += d;
    scatter_prototype_grad(cosine_distance_grad(*p_o, *p_s), m_o, p_o->pixel_count,
                           out.grad_features_orig);
    scatter_prototype_grad(cosine_distance_grad(*p_s, *p_o), m_s, p_s->pixel_count,
                           out.grad_features_swapped);
  }
  return out;
}

double pseudo_label_loss(const Planes& seg_probs, const Planes& pseudo,
                         bool positive_only) {
  return pseudo_label_loss_grad(seg_probs, pseudo, positive_only).value;
}

LossGrad pseudo_label_loss_grad(const Planes& seg_probs, const Planes& pseudo,
                                bool positive_only) {
  return positive_only ? positive_ce_loss_grad(seg_probs, pseudo)
                       : bce_loss_grad(seg_probs, pseudo);
}

void validate_weights(const LossWeights& w) {
  if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || !std::isfinite(w.alpha) ||
      !std::isfinite(w.beta)) {
    throw ConfigError("loss weights alpha and beta must be finite and >= 0");
  }
}

double total_adaptation_loss(const AdaptationLossParts& parts,
                             const LossWeights& weights) {
  validate_weights(weights);
  return parts.tseg + weights.alpha * parts.bc + weights.beta * parts.fc;
}

}  // namespace mcda
