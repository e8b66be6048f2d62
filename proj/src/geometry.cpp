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

#include "mcda/imaging.hpp"

namespace mcda {

std::optional<BoundingBox> tight_bbox(const Planes& mask, int channel) {
  if (channel < 0 || channel >= mask.channels()) {
    throw ShapeError("tight_bbox: channel out of range");
  }
  int top = mask.height(), left = mask.width(), bottom = -1, right = -1;
  // Top-down row scan.
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(channel, y, x) == 0.0) continue;
      top = std::min(top, y);
      bottom = std::max(bottom, y);
      left = std::min(left, x);
      right = std::max(right, x);
    }
  }
  if (bottom < 0) return std::nullopt;
  return BoundingBox{top, left, bottom + 1, right + 1};
}

Planes crop(const Planes& image, const BoundingBox& box) {
  if (!box.valid_for(image.height(), image.width())) {
    throw ShapeError("crop box outside image");
  }
  Planes out(image.channels(), box.height(), box.width());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < box.height(); ++y) {
      for (int x = 0; x < box.width(); ++x) {
        out.at(c, y, x) = image.at(c, box.top + y, box.left + x);
      }
    }
  }
  return out;
}

Planes resize_bilinear(const Planes& image, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0 || image.height() <= 0 ||
      image.width() <= 0) {
    throw ShapeError("resize_bilinear: empty size");
  }
  const int ih = image.height(), iw = image.width();
  const double sy = static_cast<double>(ih) / out_height;
  const double sx = static_cast<double>(iw) / out_width;
  Planes out(image.channels(), out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, ih - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, ih - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, iw - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, iw - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top =
            image.at(c, y0, x0) * (1 - wx) + image.at(c, y0, x1) * wx;
        const double bot =
            image.at(c, y1, x0) * (1 - wx) + image.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Planes replace_background(const Planes& target, const BoundingBox& target_box,
                          const Planes& host, const BoundingBox& host_box) {
  if (target.channels() != host.channels()) {
    throw ShapeError("replace_background: channel count differs");
  }
  if (!host_box.valid_for(host.height(), host.width())) {
    throw ShapeError("replace_background: host box outside host image");
  }
  Planes patch = resize_bilinear(crop(target, target_box), host_box.height(),
                                 host_box.width());
  Planes out = host;
  for (int c = 0; c < host.channels(); ++c) {
    for (int y = 0; y < host_box.height(); ++y) {
      for (int x = 0; x < host_box.width(); ++x) {
        out.at(c, host_box.top + y, host_box.left + x) = patch.at(c, y, x);
      }
    }
  }
  return out;
}

Planes gaussian_blur(const Planes& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;

  const int C = image.channels(), H = image.height(), W = image.width();
  Planes tmp(C, H, W), out(C, H, W);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * image.at(c, y, std::clamp(x + i, 0, W - 1));
        }
        tmp.at(c, y, x) = acc;
      }
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(c, std::clamp(y + i, 0, H - 1), x);
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

}  // namespace mcda
