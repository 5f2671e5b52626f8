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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lingstat/chars.hpp"
#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/power_law.hpp"

namespace lingstat {

// Text-to-number rules for DFA.
enum class Mapping {
  space_indicator,  // 1 on whitespace, else 0
  vowel_indicator,  // 1 on a/e/i/o/u in either case, else 0
  byte_value,       // the code point itself
};

inline std::string_view mapping_name(Mapping m) {
  switch (m) {
    case Mapping::space_indicator: return "space";
    case Mapping::vowel_indicator: return "vowel";
    case Mapping::byte_value: return "byte";
  }
  return "?";
}

inline Mapping parse_mapping(std::string_view name) {
  if (name == "space" || name == "SPACE_INDICATOR") return Mapping::space_indicator;
  if (name == "vowel" || name == "VOWEL_INDICATOR") return Mapping::vowel_indicator;
  if (name == "byte" || name == "BYTE_VALUE") return Mapping::byte_value;
  throw ArgumentError("unknown mapping '" + std::string(name) +
                      "' (expected space, vowel or byte)");
}

struct NumericSeries {
  std::vector<double> values;
  std::string mapping_name;
};

struct FluctuationPoint {
  double scale;
  double fluctuation;
  double normalised;  // F(L) / F(L_min); 0 when F(L_min) is 0
};

struct FluctuationCurve {
  std::vector<FluctuationPoint> points;
  std::size_t detrend_order = 1;
  bool degenerate = false;      // F is identically zero
  bool non_decreasing = true;   // false hints at a too-short series
};

inline constexpr FitWindow kDfaWindow{100, 10000};

inline NumericSeries map_text(const Corpus& corpus, Mapping mapping = Mapping::space_indicator) {
  if (corpus.empty()) throw ArgumentError("cannot map an empty text");
  std::vector<double> per_symbol(corpus.alphabet_size());
  for (std::size_t s = 0; s < per_symbol.size(); ++s) {
    const char32_t c = corpus.alphabet()[s];
    switch (mapping) {
      case Mapping::space_indicator: per_symbol[s] = chars::is_space(c) ? 1 : 0; break;
      case Mapping::vowel_indicator: per_symbol[s] = chars::is_vowel(c) ? 1 : 0; break;
      case Mapping::byte_value: per_symbol[s] = static_cast<double>(c); break;
    }
  }
  NumericSeries out{{}, std::string(mapping_name(mapping))};
  out.values.reserve(corpus.size());
  for (auto s : corpus.chars()) out.values.push_back(per_symbol[s]);
  return out;
}

// `count` window sizes spaced geometrically over [lo, hi], rounded and
// de-duplicated.
inline std::vector<std::size_t> geometric_scales(std::size_t lo, std::size_t hi,
                                                 std::size_t count = 20) {
  if (lo < 2 || hi < lo || count < 2) throw ArgumentError("bad DFA scale range");
  std::vector<std::size_t> out;
  const double ratio = std::pow(static_cast<double>(hi) / static_cast<double>(lo),
                                1.0 / static_cast<double>(count - 1));
  for (std::size_t i = 0; i < count; ++i) {
    const auto l = static_cast<std::size_t>(
        std::llround(static_cast<double>(lo) * std::pow(ratio, static_cast<double>(i))));
    if (out.empty() || l > out.back()) out.push_back(std::min(l, hi));
  }
  return out;
}

// Default grid: 20 scales from 10 to N/4.
inline std::vector<std::size_t> default_scales(std::size_t series_length) {
  if (series_length < 40) {
    throw ArgumentError("series of length " + std::to_string(series_length) +
                        " is too short for DFA (need at least 40)");
  }
  return geometric_scales(10, series_length / 4);
}

// Standard DFA: profile of the mean-subtracted series, non-overlapping
// windows laid from the front and again from the back, least-squares
// polynomial detrending in every window, F = RMS of all residuals.
inline FluctuationCurve dfa_curve(const NumericSeries& series,
                                  std::span<const std::size_t> scales,
                                  std::size_t detrend_order = 1) {
  const std::size_t n = series.values.size();
  if (detrend_order < 1) throw ArgumentError("detrend order must be at least 1");
  if (scales.empty()) throw ArgumentError("no DFA scales given");
  const std::size_t max_l = *std::max_element(scales.begin(), scales.end());
  if (n < 4 * max_l) {
    throw ArgumentError("series of length " + std::to_string(n) +
                        " is too short for scale " + std::to_string(max_l) +
                        "; max usable L is " + std::to_string(n / 4));
  }
  for (std::size_t l : scales) {
    if (l <= detrend_order + 1) {
      throw ArgumentError("scale " + std::to_string(l) +
                          " leaves no residual degrees of freedom");
    }
  }
  for (double v : series.values) {
    if (!std::isfinite(v)) throw ArgumentError("series has non-finite values");
  }

  double mean = 0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);
  Eigen::VectorXd profile(static_cast<Eigen::Index>(n));
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += series.values[i] - mean;
    profile[static_cast<Eigen::Index>(i)] = acc;
  }

  FluctuationCurve curve;
  curve.detrend_order = detrend_order;
  const auto q = static_cast<Eigen::Index>(detrend_order + 1);
  for (std::size_t l : scales) {
    const auto L = static_cast<Eigen::Index>(l);
    // The design matrix is the same for every window of this size, so one
    // thin QR serves them all: residual = y - Q (Q^T y).
    Eigen::MatrixXd design(L, q);
    for (Eigen::Index j = 0; j < L; ++j) {
      const double x = (2.0 * static_cast<double>(j) - static_cast<double>(L - 1)) /
                       static_cast<double>(L);
      double p = 1;
      for (Eigen::Index k = 0; k < q; ++k) design(j, k) = p, p *= x;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(L, q);

    const std::size_t windows = n / l;
    double sum_sq = 0;
    auto accumulate = [&](std::size_t start) {
      const auto y = profile.segment(static_cast<Eigen::Index>(start), L);
      const Eigen::VectorXd coef = basis.transpose() * y;
      sum_sq += (y - basis * coef).squaredNorm();
    };
    for (std::size_t w = 0; w < windows; ++w) {
      accumulate(w * l);
      accumulate(n - (w + 1) * l);
    }
    const double f = std::sqrt(sum_sq / static_cast<double>(2 * windows * l));
    curve.points.push_back({static_cast<double>(l), f, 0});
  }

  const double f0 = curve.points.front().fluctuation;
  curve.degenerate = true;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    auto& p = curve.points[i];
    p.normalised = f0 > 0 ? p.fluctuation / f0 : 0;
    if (p.fluctuation > 0) curve.degenerate = false;
    if (i > 0 && p.fluctuation < curve.points[i - 1].fluctuation) curve.non_decreasing = false;
  }
  return curve;
}

inline FluctuationCurve dfa_curve(const NumericSeries& series, std::size_t detrend_order = 1) {
  auto scales = default_scales(series.values.size());
  return dfa_curve(series, scales, detrend_order);
}

// Slope of log F against log L inside the window. A curve with F = 0
// anywhere in the window yields a flagged degenerate fit.
inline PowerLawFit dfa_alpha(const FluctuationCurve& curve, FitWindow window = kDfaWindow) {
  std::vector<Point> pts;
  bool zero_in_window = false;
  for (const auto& p : curve.points) {
    if (p.scale >= window.lo && p.scale <= window.hi) {
      pts.push_back({p.scale, p.fluctuation});
      zero_in_window |= !(p.fluctuation > 0);
    }
  }
  if (pts.size() < 3) {
    throw FitError("DFA fit needs at least 3 scales in [" + std::to_string(window.lo) +
                   ", " + std::to_string(window.hi) + "], got " + std::to_string(pts.size()));
  }
  if (curve.degenerate || zero_in_window) {
    PowerLawFit fit;
    fit.window = window;
    fit.n_points = pts.size();
    fit.degenerate = true;
    return fit;
  }
  return fit_power_law(pts, window);
}

}  // namespace lingstat
