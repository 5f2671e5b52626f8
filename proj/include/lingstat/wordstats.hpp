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
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/power_law.hpp"

namespace lingstat {

struct RankedWord {
  std::size_t rank;  // 1-based
  std::string word;
  std::uint64_t frequency;
};

struct RankFrequencyTable {
  std::vector<RankedWord> entries;

  std::vector<Point> points() const {
    std::vector<Point> p;
    p.reserve(entries.size());
    for (const auto& e : entries) {
      p.push_back({static_cast<double>(e.rank), static_cast<double>(e.frequency)});
    }
    return p;
  }
};

struct VocabularyPoint {
  std::uint64_t t;  // tokens seen
  std::uint64_t v;  // distinct words among them
};

struct VocabularyGrowthCurve {
  std::vector<VocabularyPoint> points;

  std::vector<Point> as_points() const {
    std::vector<Point> p;
    p.reserve(points.size());
    for (const auto& q : points) {
      p.push_back({static_cast<double>(q.t), static_cast<double>(q.v)});
    }
    return p;
  }
};

inline constexpr FitWindow kZipfWindow{100, 1000};
inline constexpr double kHeapsFitStart = 1000;

// Exact counts, frequency descending, ties in order of first occurrence.
inline RankFrequencyTable rank_frequency(const WordStream& words) {
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::pair<std::string_view, std::uint64_t>> counts;
  for (const auto& w : words.tokens) {
    auto [it, inserted] = index.try_emplace(w, counts.size());
    if (inserted) counts.emplace_back(w, 0);
    ++counts[it->second].second;
  }
  std::stable_sort(counts.begin(), counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  RankFrequencyTable table;
  table.entries.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    table.entries.push_back({i + 1, std::string(counts[i].first), counts[i].second});
  }
  return table;
}

inline PowerLawFit zipf_exponent(const RankFrequencyTable& table,
                                 FitWindow window = kZipfWindow) {
  if (table.entries.size() < window.hi) {
    throw FitError("Zipf fit needs a vocabulary of at least " +
                   std::to_string(static_cast<long long>(window.hi)) +
                   " distinct words, got " + std::to_string(table.entries.size()));
  }
  auto pts = table.points();
  return fit_power_law(pts, window);
}

inline PowerLawFit zipf_exponent(const WordStream& words,
                                 FitWindow window = kZipfWindow) {
  return zipf_exponent(rank_frequency(words), window);
}

// V(t) at every t up to 1000, then at steps of x1.02, always ending at the
// full stream length.
inline VocabularyGrowthCurve vocabulary_growth(const WordStream& words) {
  VocabularyGrowthCurve curve;
  std::unordered_set<std::string_view> seen;
  const std::uint64_t n = words.token_count();
  std::uint64_t next = 1;
  for (std::uint64_t t = 1; t <= n; ++t) {
    seen.insert(words.tokens[t - 1]);
    if (t == next || t == n) {
      curve.points.push_back({t, seen.size()});
      next = t < 1000 ? t + 1
                      : std::max<std::uint64_t>(t + 1, static_cast<std::uint64_t>(
                                                           static_cast<double>(t) * 1.02));
    }
  }
  return curve;
}

inline PowerLawFit heaps_exponent(const VocabularyGrowthCurve& curve,
                                  double fit_start = kHeapsFitStart) {
  if (curve.points.empty() || static_cast<double>(curve.points.back().t) <= fit_start) {
    throw FitError("Heaps fit needs more than " +
                   std::to_string(static_cast<long long>(fit_start)) + " tokens");
  }
  auto pts = curve.as_points();
  return fit_power_law(pts, {fit_start, static_cast<double>(curve.points.back().t)});
}

inline std::pair<VocabularyGrowthCurve, PowerLawFit> heaps_exponent(const WordStream& words) {
  if (words.token_count() <= 1000) {
    throw FitError("Heaps fit needs more than 1000 tokens, got " +
                   std::to_string(words.token_count()));
  }
  auto curve = vocabulary_growth(words);
  auto fit = heaps_exponent(curve);
  return {std::move(curve), fit};
}

}  // namespace lingstat
