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

// Seeded generators with known statistics, shared by the unit and
// acceptance suites. Nothing here calls into the code under test beyond
// the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lingstat/corpus.hpp"
#include "lingstat/random.hpp"

namespace lingstat::testing {

// Words "w<rank>" drawn by inverse CDF from p(r) ~ r^-beta, r = 1..vocab.
inline WordStream zipf_words(double beta, std::size_t vocab, std::size_t tokens,
                             std::uint64_t seed) {
  std::vector<double> cdf(vocab);
  double acc = 0;
  for (std::size_t r = 0; r < vocab; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -beta);
    cdf[r] = acc;
  }
  for (auto& c : cdf) c /= acc;
  Rng rng(seed);
  WordStream ws;
  ws.tokens.reserve(tokens);
  for (std::size_t i = 0; i < tokens; ++i) {
    const double u = rng.uniform();
    const auto r = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    ws.tokens.push_back("w" + std::to_string(std::min(r, vocab - 1) + 1));
  }
  return ws;
}

inline std::vector<double> iid_uniform(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform();
  return v;
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) x = (s += rng.uniform() - 0.5);
  return v;
}

// Uniform i.i.d. text over the first `k` characters of `symbols`.
inline Corpus iid_text(std::size_t n, std::u32string_view symbols, std::uint64_t seed) {
  Rng rng(seed);
  std::u32string s(n, U' ');
  for (auto& c : s) c = symbols[rng.below(symbols.size())];
  return Corpus::from_text(s);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lingstat::testing
