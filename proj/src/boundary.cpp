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

#include "mcda/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace mcda {
namespace {

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

SobelResponse sobel_response(const Planes& field) {
  const int C = field.channels(), H = field.height(), W = field.width();
  SobelResponse r{Planes(C, H, W), Planes(C, H, W)};
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        // Opposite kernel sides are summed with the same weights before the
        // difference, so constant neighborhoods give exactly zero.
        const int ym = clamp_index(y - 1, H), yp = clamp_index(y + 1, H);
        const int xm = clamp_index(x - 1, W), xp = clamp_index(x + 1, W);
        auto f = [&](int yy, int xx) { return field.at(c, yy, xx); };
        const double left = f(ym, xm) + 2.0 * f(y, xm) + f(yp, xm);
        const double right = f(ym, xp) + 2.0 * f(y, xp) + f(yp, xp);
        const double top = f(ym, xm) + 2.0 * f(ym, x) + f(ym, xp);
        const double bottom = f(yp, xm) + 2.0 * f(yp, x) + f(yp, xp);
        const double gx = right - left;
        const double gy = bottom - top;
        r.gx.at(c, y, x) = gx;
        r.gy.at(c, y, x) = gy;
      }
    }
  }
  return r;
}

Planes sobel_magnitude(const Planes& field) {
  auto r = sobel_response(field);
  Planes out(field.channels(), field.height(), field.width());
  auto& o = out.data();
  const auto& gx = r.gx.data();
  const auto& gy = r.gy.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  }
  return out;
}

Planes hard_boundary(const Planes& mask) {
  auto r = sobel_response(mask);
  Planes out(mask.channels(), mask.height(), mask.width());
  auto& o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = (r.gx.data()[i] != 0.0 || r.gy.data()[i] != 0.0) ? 1.0 : 0.0;
  }
  return out;
}

Planes soft_boundary(const Planes& probs) {
  Planes out = sobel_magnitude(probs);
  for (double& v : out.data()) v = std::clamp(v / kSobelUnitStep, 0.0, 1.0);
  return out;
}

Planes soft_boundary_backward(const Planes& probs, const Planes& grad_out) {
  require_same_shape(probs, grad_out, "soft_boundary_backward");
  const int C = probs.channels(), H = probs.height(), W = probs.width();
  auto r = sobel_response(probs);
  Planes grad(C, H, W);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double gx = r.gx.at(c, y, x), gy = r.gy.at(c, y, x);
        const double mag = std::sqrt(gx * gx + gy * gy);
        if (mag == 0.0 || mag > kSobelUnitStep) continue;
        const double g = grad_out.at(c, y, x) / (kSobelUnitStep * mag);
        const double wx = g * gx, wy = g * gy;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = clamp_index(y + dy, H);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = clamp_index(x + dx, W);
            grad.at(c, yy, xx) +=
                wx * kSobelX[dy + 1][dx + 1] + wy * kSobelY[dy + 1][dx + 1];
          }
        }
      }
    }
  }
  return grad;
}

}  // namespace mcda
