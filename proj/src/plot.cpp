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

#include "mcda/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mcda {
namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<std::string>& x_ticks,
                          const std::vector<LineSeries>& series) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = 0, hi = 1;
  if (hi - lo < 1e-9) lo -= 1, hi += 1;
  const double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const std::size_t n = x_ticks.size();
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? pw * i / (n - 1) : pw / 2); };
  auto py = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
     << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + ph << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "<g class=\"xtick\"><line x1=\"" << px(i) << "\" y1=\"" << kTop + ph << "\" x2=\""
       << px(i) << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/><text x=\"" << px(i)
       << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << escape(x_ticks[i])
       << "</text></g>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4;
    os << "<g class=\"ytick\"><line x1=\"" << kLeft - 5 << "\" y1=\"" << py(v) << "\" x2=\""
       << kLeft << "\" y2=\"" << py(v) << "\" stroke=\"black\"/><text x=\"" << kLeft - 8
       << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << num(v) << "</text></g>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(n, series[s].y.size()); ++i) {
      os << (i ? " " : "") << px(i) << "," << py(series[s].y[i]);
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < std::min(n, series[s].y.size()); ++i) {
      os << "<circle cx=\"" << px(i) << "\" cy=\"" << py(series[s].y[i]) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 20.0 * s;
    os << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 35
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\""
       << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_sweep_plot(const std::string& symbol, const std::vector<SweepPoint>& sweep) {
  std::vector<std::string> ticks;
  LineSeries disc{"Optic disc", {}}, cup{"Optic cup", {}}, avg{"Avg", {}};
  for (const auto& p : sweep) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", p.value);
    ticks.push_back(buf);
    disc.y.push_back(p.metrics.classes[kDisc].dice_mean);
    cup.y.push_back(p.metrics.classes[kCup].dice_mean);
    avg.y.push_back(p.metrics.avg_dice());
  }
  return svg_line_plot("Dice vs " + symbol, symbol, "Dice [%]", ticks, {disc, cup, avg});
}

}  // namespace mcda
