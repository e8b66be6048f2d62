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
#include <cstdio>
#include <numbers>
#include <random>

#include "mcda/imaging.hpp"

namespace mcda {
namespace {

struct Ellipse {
  double cy, cx, ry, rx, theta;

  // Normalized radius: <= 1 inside.
  double rho(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::sqrt((u / rx) * (u / rx) + (v / ry) * (v / ry));
  }
  double mean_radius() const { return 0.5 * (rx + ry); }
};

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Soft coverage of an ellipse edge with the given transition width.
double coverage(const Ellipse& e, double y, double x, double softness) {
  const double signed_px = (1.0 - e.rho(y, x)) * e.mean_radius();
  return sigmoid(signed_px / std::max(softness, 1e-3) * 2.0);
}

}  // namespace

DomainParams synthetic_source_preset() {
  DomainParams p;
  p.name = "synthetic-source";
  return p;
}

DomainParams synthetic_target_preset() {
  DomainParams p;
  p.name = "synthetic-target";
  p.background_rgb = {0.42, 0.3, 0.22};
  p.disc_rgb = {0.66, 0.5, 0.36};
  p.cup_rgb = {0.8, 0.68, 0.52};
  p.palette_jitter = 0.05;
  p.contrast = 0.85;
  p.edge_softness = 1.6;
  p.texture = BackgroundTexture::kStripes;
  p.texture_amplitude = 0.08;
  p.vessel_count = 6;
  p.vessel_darkness = 0.3;
  p.blur_sigma = 1.1;
  p.noise_sigma = 0.03;
  return p;
}

bool is_domain_preset(const std::string& name) {
  return name == "synthetic-source" || name == "synthetic-target";
}

DomainParams domain_preset(const std::string& name) {
  if (name == "synthetic-source") return synthetic_source_preset();
  if (name == "synthetic-target") return synthetic_target_preset();
  throw ConfigError("unknown synthetic preset '" + name +
                    "' (expected synthetic-source or synthetic-target)");
}

void validate_domain(const DomainParams& p) {
  if (p.size < kMinImageSide) throw ConfigError("domain size must be >= 8");
  if (!(p.disc_radius_min > 0.0) || p.disc_radius_min > p.disc_radius_max) {
    throw ConfigError("disc radius range must satisfy 0 < min <= max");
  }
  if (p.center_jitter < 0.0 ||
      p.disc_radius_max + p.center_jitter > p.size / 2.0 - 1.0) {
    throw ConfigError("disc radius range plus center jitter exceeds the " +
                      std::to_string(p.size) + "px image bounds");
  }
  if (!(p.cup_ratio_min > 0.0) || p.cup_ratio_min > p.cup_ratio_max ||
      p.cup_ratio_max > 1.0) {
    throw ConfigError("cup ratio range must satisfy 0 < min <= max <= 1");
  }
  if (p.cup_offset < 0.0 || p.cup_offset > 0.5) {
    throw ConfigError("cup offset must be in [0, 0.5]");
  }
  if (p.blur_sigma < 0.0 || p.noise_sigma < 0.0 || p.contrast <= 0.0 ||
      p.edge_softness <= 0.0 || p.vessel_count < 0) {
    throw ConfigError("blur, noise, contrast, softness or vessel count out "
                      "of range");
  }
}

AnnotatedSample synth_sample(const DomainParams& p, std::uint64_t seed,
                             std::size_t index) {
  validate_domain(p);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * u01(rng); };

  const int N = p.size;
  const double mid = (N - 1) / 2.0;
  Ellipse disc{mid + uniform(-p.center_jitter, p.center_jitter),
               mid + uniform(-p.center_jitter, p.center_jitter),
               uniform(p.disc_radius_min, p.disc_radius_max),
               uniform(p.disc_radius_min, p.disc_radius_max),
               uniform(0.0, std::numbers::pi)};
  const double ratio = uniform(p.cup_ratio_min, p.cup_ratio_max);
  const double aspect = uniform(0.9, 1.1);
  const double off_r = uniform(0.0, p.cup_offset) * disc.mean_radius();
  const double off_a = uniform(0.0, 2.0 * std::numbers::pi);
  Ellipse cup{disc.cy + off_r * std::sin(off_a),
              disc.cx + off_r * std::cos(off_a), disc.ry * ratio * aspect,
              disc.rx * ratio / aspect, disc.theta + uniform(-0.3, 0.3)};

  auto jitter = [&](std::array<double, 3> rgb) {
    for (double& v : rgb) v += uniform(-p.palette_jitter, p.palette_jitter);
    return rgb;
  };
  const auto bg = jitter(p.background_rgb);
  const auto dc = jitter(p.disc_rgb);
  const auto cc = jitter(p.cup_rgb);

  // Background texture field in roughly [-1, 1].
  std::vector<double> texture(static_cast<std::size_t>(N) * N, 0.0);
  if (p.texture == BackgroundTexture::kBlotches) {
    for (int b = 0; b < 5; ++b) {
      const double by = uniform(0, N), bx = uniform(0, N);
      const double r = uniform(N / 10.0, N / 4.0);
      const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
      for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) {
          const double d2 = (y - by) * (y - by) + (x - bx) * (x - bx);
          texture[y * N + x] += sign * std::exp(-0.5 * d2 / (r * r));
        }
      }
    }
  } else if (p.texture == BackgroundTexture::kStripes) {
    const double dir = uniform(0.0, std::numbers::pi);
    const double period = uniform(N / 8.0, N / 4.0);
    const double phase = uniform(0.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < N; ++y) {
      for (int x = 0; x < N; ++x) {
        const double t = std::cos(dir) * x + std::sin(dir) * y;
        texture[y * N + x] =
            std::sin(2.0 * std::numbers::pi * t / period + phase);
      }
    }
  }

  struct Vessel {
    double angle, width;
  };
  std::vector<Vessel> vessels;
  for (int v = 0; v < p.vessel_count; ++v) {
    vessels.push_back({uniform(0.0, 2.0 * std::numbers::pi), uniform(0.8, 1.6)});
  }

  Planes image(kImageChannels, N, N);
  Planes mask(kNumClasses, N, N);
  for (int y = 0; y < N; ++y) {
    for (int x = 0; x < N; ++x) {
      const bool in_disc = disc.rho(y, x) <= 1.0;
      const bool in_cup = in_disc && cup.rho(y, x) <= 1.0;
      mask.at(kDisc, y, x) = in_disc ? 1.0 : 0.0;
      mask.at(kCup, y, x) = in_cup ? 1.0 : 0.0;

      const double a_disc = coverage(disc, y, x, p.edge_softness);
      const double a_cup =
          std::min(a_disc, coverage(cup, y, x, p.edge_softness));
      double vessel_shade = 1.0;
      for (const auto& v : vessels) {
        // Distance from the ray leaving the disc center along v.angle.
        const double dy = y - disc.cy, dx = x - disc.cx;
        const double along = dx * std::cos(v.angle) + dy * std::sin(v.angle);
        if (along < disc.mean_radius() * 0.3) continue;
        const double across =
            -dx * std::sin(v.angle) + dy * std::cos(v.angle);
        const double prof = std::exp(-0.5 * across * across /
                                     (v.width * v.width));
        vessel_shade *= 1.0 - p.vessel_darkness * prof;
      }
      const double tex = p.texture_amplitude * texture[y * N + x];
      for (int c = 0; c < kImageChannels; ++c) {
        double v = bg[c] + tex;
        v = v * (1.0 - a_disc) + dc[c] * a_disc;
        v = v * (1.0 - a_cup) + cc[c] * a_cup;
        image.at(c, y, x) = v * vessel_shade;
      }
    }
  }

  if (p.contrast != 1.0) {
    for (int c = 0; c < kImageChannels; ++c) {
      auto plane = image.plane(c);
      double mean = 0.0;
      for (double v : plane) mean += v;
      mean /= static_cast<double>(plane.size());
      for (double& v : plane) v = mean + p.contrast * (v - mean);
    }
  }
  image = gaussian_blur(image, p.blur_sigma);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double& v : image.data()) {
    v = std::clamp(v + p.noise_sigma * noise(rng), 0.0, 1.0);
  }

  char name[32];
  std::snprintf(name, sizeof(name), "%05zu", index);
  return make_sample(name, std::move(image), std::move(mask));
}

std::vector<AnnotatedSample> synth_dataset(const DomainParams& params,
                                           std::size_t n, std::uint64_t seed) {
  validate_domain(params);
  std::vector<AnnotatedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth_sample(params, seed, i));
  return out;
}

}  // namespace mcda
