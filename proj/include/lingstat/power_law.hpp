// Copyright 2026 The lingstat Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lingstat/error.hpp"

namespace lingstat {

struct Point {
  double x;
  double y;
};

// Closed interval in the fitted (linear, not log) coordinate.
struct FitWindow {
  double lo;
  double hi;
};

// Least-squares line through (log10 x, log10 y). `exponent` is |slope|.
// A degenerate fit (e.g. DFA of a constant series) carries exponent 0 and
// the flag set instead of raising.
struct PowerLawFit {
  double exponent = 0;
  double slope = 0;
  double intercept = 0;
  double std_error = 0;
  FitWindow window{0, 0};
  double r_squared = 0;
  std::size_t n_points = 0;
  bool degenerate = false;
};

// Ordinary least squares on the in-window points with y > 0.
inline PowerLawFit fit_power_law(std::span<const Point> points, FitWindow window) {
  if (!(window.lo < window.hi)) throw ArgumentError("fit window needs lo < hi");
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    if (p.x >= window.lo && p.x <= window.hi && p.x > 0 && p.y > 0) {
      lx.push_back(std::log10(p.x));
      ly.push_back(std::log10(p.y));
    }
  }
  const std::size_t n = lx.size();
  if (n < 3) {
    throw FitError("power-law fit needs at least 3 points in [" +
                   std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                   "], got " + std::to_string(n));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx, dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) throw FitError("power-law fit: all x values coincide");

  PowerLawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.exponent = std::abs(fit.slope);
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  fit.std_error = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  fit.r_squared = syy > 0 ? 1.0 - sse / syy : 1.0;
  fit.window = window;
  fit.n_points = n;
  return fit;
}

}  // namespace lingstat
