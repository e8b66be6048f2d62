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

#include "mcda/planes.hpp"

#include <algorithm>

namespace mcda {

std::string Planes::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
         std::to_string(width_);
}

Planes Planes::channel(int c) const {
  if (c < 0 || c >= channels_) throw ShapeError("channel index out of range");
  Planes out(1, height_, width_);
  auto src = plane(c);
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

}  // namespace mcda
