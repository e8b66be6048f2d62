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

#include "mcda/planes.hpp"

namespace mcda {

using Kernel3 = std::array<std::array<int, 3>, 3>;

// Horizontal and vertical Sobel templates, indexed [row][col].
inline constexpr Kernel3 kSobelX{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
inline constexpr Kernel3 kSobelY{{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};

// Largest single-axis response of either kernel on a field bounded in [0,1].
inline constexpr double kSobelUnitStep = 4.0;

struct SobelResponse {
  Planes gx;
  Planes gy;
};

// Per-channel correlation with both kernels under replicate padding.
SobelResponse sobel_response(const Planes& field);

// Per-channel sqrt(gx^2 + gy^2); output shape equals input shape.
Planes sobel_magnitude(const Planes& field);

// Binary boundary labels for a binary mask: 1 wherever the Sobel magnitude is
// nonzero. Binary inputs keep every intermediate value an exact small integer.
Planes hard_boundary(const Planes& mask);

// Differentiable boundary map of a probability map:
// clamp(sobel_magnitude / 4, 0, 1) per channel.
Planes soft_boundary(const Planes& probs);

// Vector-Jacobian product of soft_boundary at `probs` with `grad_out`.
// Pixels with zero magnitude or a saturated clamp pass no gradient.
Planes soft_boundary_backward(const Planes& probs, const Planes& grad_out);

}  // namespace mcda
