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
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/suffix_automaton.hpp"

namespace lingstat {

struct CommonSubstring {
  std::size_t length = 0;
  std::size_t text_offset = 0;    // start in the query text
  std::size_t corpus_offset = 0;  // start of one occurrence in the indexed corpus
};

// Longest contiguous run shared by `text` and the indexed corpus.
inline CommonSubstring longest_common_substring(const Corpus& text, const SuffixIndex& index) {
  if (text.empty()) throw ArgumentError("LCS of an empty text");
  const auto sym = index.translate(text);
  CommonSubstring best;
  auto v = SuffixIndex::kRoot;
  std::size_t l = 0;
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const Symbol c = sym[i];
    if (c == SuffixIndex::kAbsent) {
      v = SuffixIndex::kRoot;
      l = 0;
      continue;
    }
    while (v != SuffixIndex::kRoot && index.next(v, c) == SuffixIndex::kNone) {
      v = index.link(v);
      l = static_cast<std::size_t>(index.length(v));
    }
    const auto u = index.next(v, c);
    if (u == SuffixIndex::kNone) {
      l = 0;
      continue;
    }
    v = u;
    ++l;
    if (l > best.length) {
      best.length = l;
      best.text_offset = i + 1 - l;
      best.corpus_offset = static_cast<std::size_t>(index.first_end(v)) + 1 - l;
    }
  }
  return best;
}

inline CommonSubstring longest_common_substring(const Corpus& text, const Corpus& corpus) {
  return longest_common_substring(text, SuffixIndex(corpus));
}

// Overlapping character n-grams with occurrence counts, keyed by the
// n-gram text.
inline std::map<std::u32string, std::uint64_t> ngram_profile(const Corpus& text, std::size_t n) {
  if (n == 0) throw ArgumentError("n-gram size must be positive");
  if (text.size() < n) {
    throw ArgumentError("text of length " + std::to_string(text.size()) +
                        " has no " + std::to_string(n) + "-grams");
  }
  const std::u32string s = text.text();
  std::map<std::u32string, std::uint64_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
  return out;
}

namespace detail {

struct SymbolRange {
  std::span<const Symbol> s;
  bool operator==(const SymbolRange& o) const {
    return std::equal(s.begin(), s.end(), o.s.begin(), o.s.end());
  }
};

struct SymbolRangeHash {
  std::size_t operator()(const SymbolRange& r) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto c : r.s) h = (h ^ c) * 1099511628211ULL;
    return static_cast<std::size_t>(h);
  }
};

// Start offsets of the first occurrence of each distinct n-gram.
inline std::vector<std::size_t> distinct_ngram_starts(std::span<const Symbol> x, std::size_t n) {
  std::unordered_set<SymbolRange, SymbolRangeHash> seen;
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + n <= x.size(); ++i) {
    if (seen.insert({x.subspan(i, n)}).second) starts.push_back(i);
  }
  return starts;
}

inline double shared_fraction(std::span<const Symbol> translated,
                              std::span<const std::size_t> starts, std::size_t n,
                              const SuffixIndex& ref) {
  std::size_t found = 0;
  for (auto i : starts) found += ref.contains(translated.subspan(i, n));
  return static_cast<double>(found) / static_cast<double>(starts.size());
}

}  // namespace detail

// Two-author index in [-1, 1]. s_a and s_b are the fractions of the
// distinct character n-grams of x found in each reference; I is their
// normalized difference, 0 when neither reference shares anything.
inline double attribution_index(const Corpus& x, const SuffixIndex& ref_a,
                                const SuffixIndex& ref_b, std::size_t n) {
  if (n == 0) throw ArgumentError("n-gram size must be positive");
  if (x.size() < n || ref_a.text_length() < n || ref_b.text_length() < n) {
    throw ArgumentError("attribution needs every text to hold at least " + std::to_string(n) +
                        " characters");
  }
  const auto starts = detail::distinct_ngram_starts(x.chars(), n);
  const double sa = detail::shared_fraction(ref_a.translate(x), starts, n, ref_a);
  const double sb = detail::shared_fraction(ref_b.translate(x), starts, n, ref_b);
  if (sa + sb == 0) return 0;
  return (sa - sb) / (sa + sb);
}

inline double attribution_index(const Corpus& x, const Corpus& ref_a, const Corpus& ref_b,
                                std::size_t n) {
  return attribution_index(x, SuffixIndex(ref_a), SuffixIndex(ref_b), n);
}

}  // namespace lingstat
