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

#include <string>
#include <vector>

#include "mcda/adaptation.hpp"

namespace mcda {

struct LineSeries {
  std::string label;
  std::vector<double> y;
};

// Standalone SVG line chart over categorical x positions, one tick per
// label. Every tick is emitted as <g class="xtick">.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<std::string>& x_ticks,
                          const std::vector<LineSeries>& series);

// Dice of disc, cup and their mean against the swept weight.
std::string svg_sweep_plot(const std::string& symbol, const std::vector<SweepPoint>& sweep);

}  // namespace mcda
