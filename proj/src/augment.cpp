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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mcda/boundary.hpp"
#include "mcda/imaging.hpp"

namespace mcda {
namespace {

struct Coord {
  double y;
  double x;
};

// Maps an output pixel to its source location under the geometric part of
// `p`.
class Warp {
 public:
  Warp(const AugmentParams& p, int height, int width)
      : p_(p), h_(height), w_(width) {
    const double rad = p.rotate_deg * std::numbers::pi / 180.0;
    cos_ = std::cos(rad);
    sin_ = std::sin(rad);
  }

  Coord source(int y, int x) const {
    double sy = y, sx = x;
    if (p_.elastic_grid >= 2) {
      auto [dy, dx] = displacement(y, x);
      sy += dy;
      sx += dx;
    }
    if (p_.rotate_deg != 0.0) {
      const double cy = (h_ - 1) / 2.0, cx = (w_ - 1) / 2.0;
      const double ry = sy - cy, rx = sx - cx;
      sy = cy + cos_ * ry - sin_ * rx;
      sx = cx + sin_ * ry + cos_ * rx;
    }
    if (p_.hflip) sx = (w_ - 1) - sx;
    if (p_.vflip) sy = (h_ - 1) - sy;
    return {sy, sx};
  }

 private:
  std::pair<double, double> displacement(int y, int x) const {
    const int g = p_.elastic_grid;
    const double gy = h_ > 1 ? y * (g - 1.0) / (h_ - 1) : 0.0;
    const double gx = w_ > 1 ? x * (g - 1.0) / (w_ - 1) : 0.0;
    const int y0 = std::min(static_cast<int>(gy), g - 2);
    const int x0 = std::min(static_cast<int>(gx), g - 2);
    const double ty = gy - y0, tx = gx - x0;
    auto lerp2 = [&](const std::vector<double>& v) {
      const double a = v[y0 * g + x0], b = v[y0 * g + x0 + 1];
      const double c = v[(y0 + 1) * g + x0], d = v[(y0 + 1) * g + x0 + 1];
      return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
    };
    return {lerp2(p_.elastic_dy), lerp2(p_.elastic_dx)};
  }

  const AugmentParams& p_;
  int h_, w_;
  double cos_ = 1.0, sin_ = 0.0;
};

double sample_bilinear(const Planes& img, int c, double y, double x) {
  const int H = img.height(), W = img.width();
  y = std::clamp(y, 0.0, H - 1.0);
  x = std::clamp(x, 0.0, W - 1.0);
  const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
  const int y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
  const double wy = y - y0, wx = x - x0;
  return (img.at(c, y0, x0) * (1 - wx) + img.at(c, y0, x1) * wx) * (1 - wy) +
         (img.at(c, y1, x0) * (1 - wx) + img.at(c, y1, x1) * wx) * wy;
}

bool has_geometry(const AugmentParams& p) {
  return p.hflip || p.vflip || p.rotate_deg != 0.0 || p.elastic_grid >= 2;
}

}  // namespace

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.hflip_prob = c.vflip_prob = c.rotate_prob = c.elastic_prob = 0.0;
  c.contrast_prob = c.noise_prob = c.erase_prob = 0.0;
  return c;
}

bool AugmentParams::is_identity() const {
  return !has_geometry(*this) && contrast == 1.0 && noise_sigma == 0.0 &&
         !erase_box.has_value();
}

AugmentParams draw_augment(const AugmentConfig& cfg, int height, int width,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto coin = [&](double p) { return u01(rng) < p; };
  auto uniform = [&](double a, double b) { return a + (b - a) * u01(rng); };

  // Every draw below happens unconditionally so that toggling one transform
  // does not reshuffle the others.
  AugmentParams p;
  p.hflip = coin(cfg.hflip_prob);
  p.vflip = coin(cfg.vflip_prob);

  const bool rotate = coin(cfg.rotate_prob);
  const double angle = uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg);
  if (rotate) p.rotate_deg = angle;

  const bool elastic = coin(cfg.elastic_prob);
  const int g = std::max(2, cfg.elastic_grid);
  std::vector<double> dy(g * g), dx(g * g);
  for (int i = 0; i < g * g; ++i) {
    dy[i] = uniform(-cfg.elastic_magnitude, cfg.elastic_magnitude);
    dx[i] = uniform(-cfg.elastic_magnitude, cfg.elastic_magnitude);
  }
  if (elastic && cfg.elastic_magnitude > 0.0) {
    p.elastic_grid = g;
    p.elastic_dy = std::move(dy);
    p.elastic_dx = std::move(dx);
  }

  const bool contrast = coin(cfg.contrast_prob);
  const double factor = uniform(cfg.contrast_min, cfg.contrast_max);
  if (contrast) p.contrast = factor;

  const bool noise = coin(cfg.noise_prob);
  const double sigma = uniform(0.0, cfg.noise_sigma_max);
  p.noise_seed = rng();
  if (noise) p.noise_sigma = sigma;

  const bool erase = coin(cfg.erase_prob);
  const double area = uniform(cfg.erase_area_min, cfg.erase_area_max);
  const double aspect = uniform(0.5, 2.0);
  const double ey = u01(rng), ex = u01(rng);
  std::array<double, 3> fill{u01(rng), u01(rng), u01(rng)};
  if (erase && area > 0.0) {
    const double pixels = area * height * width;
    const int eh = std::clamp(
        static_cast<int>(std::lround(std::sqrt(pixels * aspect))), 1, height);
    const int ew = std::clamp(
        static_cast<int>(std::lround(std::sqrt(pixels / aspect))), 1, width);
    const int top = static_cast<int>(ey * (height - eh + 1));
    const int left = static_cast<int>(ex * (width - ew + 1));
    p.erase_box = BoundingBox{top, left, top + eh, left + ew};
    p.erase_fill = fill;
  }
  return p;
}

AnnotatedSample apply_augment(const AnnotatedSample& sample,
                              const AugmentParams& p) {
  AnnotatedSample out = sample;
  if (p.is_identity()) return out;
  const int H = sample.image.height(), W = sample.image.width();

  if (has_geometry(p)) {
    Warp warp(p, H, W);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Coord s = warp.source(y, x);
        for (int c = 0; c < sample.image.channels(); ++c) {
          out.image.at(c, y, x) = sample_bilinear(sample.image, c, s.y, s.x);
        }
        const long my = std::lround(s.y), mx = std::lround(s.x);
        const bool inside = my >= 0 && my < H && mx >= 0 && mx < W;
        for (int c = 0; c < sample.mask.channels(); ++c) {
          out.mask.at(c, y, x) =
              inside ? sample.mask.at(c, static_cast<int>(my),
                                      static_cast<int>(mx))
                     : 0.0;
        }
      }
    }
    out.boundary = hard_boundary(out.mask);
  }

  if (p.contrast != 1.0) {
    for (int c = 0; c < out.image.channels(); ++c) {
      auto plane = out.image.plane(c);
      double mean = 0.0;
      for (double v : plane) mean += v;
      mean /= static_cast<double>(plane.size());
      for (double& v : plane) {
        v = std::clamp(mean + p.contrast * (v - mean), 0.0, 1.0);
      }
    }
  }

  if (p.noise_sigma > 0.0) {
    std::mt19937_64 rng(p.noise_seed);
    std::normal_distribution<double> n(0.0, p.noise_sigma);
    for (double& v : out.image.data()) v = std::clamp(v + n(rng), 0.0, 1.0);
  }

  if (p.erase_box) {
    const auto& b = *p.erase_box;
    for (int c = 0; c < out.image.channels(); ++c) {
      for (int y = b.top; y < b.bottom; ++y) {
        for (int x = b.left; x < b.right; ++x) {
          out.image.at(c, y, x) = p.erase_fill[c % 3];
        }
      }
    }
  }
  return out;
}

AnnotatedSample source_augment(const AnnotatedSample& sample,
                               std::uint64_t seed,
                               const AugmentConfig& config) {
  return apply_augment(sample,
                       draw_augment(config, sample.image.height(),
                                    sample.image.width(), seed));
}

}  // namespace mcda
