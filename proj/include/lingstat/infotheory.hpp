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
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/suffix_automaton.hpp"

namespace lingstat {

inline constexpr std::size_t kMinEstimatorLength = 10000;
inline constexpr std::size_t kRecommendedEstimatorLength = 100000;

// How a position's match statistic is counted.
enum class MatchStatistic {
  longest_match,   // longest prefix at i that starts somewhere before i
  shortest_absent, // one more than that: shortest prefix not seen before
};

struct EntropyOptions {
  // Positions before this fraction of the text only serve as history.
  double warmup_fraction = 0.5;
  MatchStatistic statistic = MatchStatistic::longest_match;
};

struct EntropyEstimate {
  double bits_per_char = 0;
  std::string method;
  std::size_t sample_length = 0;
  std::size_t evaluated_positions = 0;
  bool short_sample = false;  // below the recommended length
};

struct DivergenceReport {
  double kl_ab = 0;
  double kl_ba = 0;
  double symmetrized = 0;
};

// For every i, the length of the longest string starting at i that also
// starts at some j < i (overlap allowed). Linear time: one automaton of the
// text itself, keeping only matches whose first occurrence begins before i.
inline std::vector<std::uint32_t> longest_previous_factor(const Corpus& text) {
  const SuffixIndex index(text);
  const auto t = text.chars();
  const auto n = static_cast<std::int64_t>(t.size());
  std::vector<std::uint32_t> out(t.size());
  SuffixIndex::StateId v = SuffixIndex::kRoot;
  std::int64_t l = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    while (i + l < n) {
      const auto u = index.next(v, t[i + l]);
      if (u == SuffixIndex::kNone || index.first_end(u) - l >= i) break;
      v = u;
      ++l;
    }
    out[i] = static_cast<std::uint32_t>(l);
    if (l > 0) {
      --l;
      if (l <= index.length(index.link(v))) v = index.link(v);
    }
  }
  return out;
}

// Increasing-window match-length estimator:
//   H = sum log2(i) / sum Lambda_i
// over the positions after the warm-up prefix.
inline EntropyEstimate entropy_rate(const Corpus& text, const EntropyOptions& opt = {}) {
  const std::size_t n = text.size();
  if (n < kMinEstimatorLength) {
    throw ArgumentError("entropy estimate needs at least " +
                        std::to_string(kMinEstimatorLength) + " characters, got " +
                        std::to_string(n));
  }
  if (!(opt.warmup_fraction >= 0 && opt.warmup_fraction < 1)) {
    throw ArgumentError("warmup fraction must lie in [0, 1)");
  }
  const auto lpf = longest_previous_factor(text);
  const std::size_t start = std::max<std::size_t>(
      2, static_cast<std::size_t>(opt.warmup_fraction * static_cast<double>(n)));
  const double extra = opt.statistic == MatchStatistic::shortest_absent ? 1.0 : 0.0;
  double num = 0, den = 0;
  for (std::size_t i = start; i < n; ++i) {
    num += std::log2(static_cast<double>(i));
    den += static_cast<double>(lpf[i]) + extra;
  }
  EntropyEstimate e;
  e.method = opt.statistic == MatchStatistic::longest_match ? "match-length/longest"
                                                            : "match-length/shortest-absent";
  e.sample_length = n;
  e.evaluated_positions = n - start;
  e.short_sample = n < kRecommendedEstimatorLength;
  // Every position matching to the end only happens for periodic text,
  // whose entropy rate is zero.
  e.bits_per_char = den > 0 ? num / den : 0;
  return e;
}

// Number of phrases in the greedy parse of `a` into substrings of the
// indexed text. A character the index has never seen is its own phrase.
inline std::size_t cross_parse_phrases(std::span<const Symbol> a, const SuffixIndex& b) {
  std::size_t phrases = 0;
  std::size_t p = 0;
  while (p < a.size()) {
    auto s = SuffixIndex::kRoot;
    std::size_t len = 0;
    while (p + len < a.size()) {
      const auto u = b.next(s, a[p + len]);
      if (u == SuffixIndex::kNone) break;
      s = u;
      ++len;
    }
    p += std::max<std::size_t>(len, 1);
    ++phrases;
  }
  return phrases;
}

// Cross-entropy of a with respect to b in bits per character.
inline double cross_entropy(const Corpus& a, const SuffixIndex& b) {
  const auto sym = b.translate(a);
  const double c = static_cast<double>(cross_parse_phrases(sym, b));
  return c * std::log2(static_cast<double>(b.text_length())) / static_cast<double>(a.size());
}

inline void check_estimator_input(const Corpus& c, const char* name) {
  if (c.size() < kMinEstimatorLength) {
    throw ArgumentError(std::string("divergence input ") + name + " needs at least " +
                        std::to_string(kMinEstimatorLength) + " characters, got " +
                        std::to_string(c.size()));
  }
}

// D(a || b) from a precomputed index of b and entropy of a.
inline double kl_divergence(const Corpus& a, double entropy_a, const SuffixIndex& b) {
  return cross_entropy(a, b) - entropy_a;
}

inline DivergenceReport cross_divergence(const Corpus& a, const Corpus& b,
                                         const EntropyOptions& opt = {}) {
  check_estimator_input(a, "A");
  check_estimator_input(b, "B");
  const SuffixIndex ia(a), ib(b);
  DivergenceReport r;
  r.kl_ab = kl_divergence(a, entropy_rate(a, opt).bits_per_char, ib);
  r.kl_ba = kl_divergence(b, entropy_rate(b, opt).bits_per_char, ia);
  r.symmetrized = (r.kl_ab + r.kl_ba) / 2;
  return r;
}

// Bigram word model with absolute discounting and interpolation into a
// unigram distribution that reserves mass for an unknown word:
//
//   P_uni(w)   = c(w) / (T + n1)       P_uni(<unk>) = n1 / (T + n1)
//   P(w | v)   = max(c(v,w) - d, 0) / c(v) + d * N1+(v) / c(v) * P_uni(w)
//
// where n1 is the number of singleton words (at least 1) and N1+(v) the
// number of distinct successors of v. Contexts never seen as a left-hand
// word fall back to P_uni. The stream is one sentence opened by <s>.
class BigramLM {
 public:
  static constexpr std::uint32_t kUnknown = 0;
  static constexpr std::uint32_t kStart = 1;
  static constexpr double kDefaultDiscount = 0.75;

  explicit BigramLM(const WordStream& words, double discount = kDefaultDiscount)
      : discount_(discount) {
    if (words.tokens.empty()) throw ArgumentError("cannot train a bigram model on no words");
    if (!(discount > 0 && discount < 1)) throw ArgumentError("discount must lie in (0, 1)");
    std::uint32_t prev = kStart;
    for (const auto& w : words.tokens) {
      auto [it, inserted] = ids_.try_emplace(w, static_cast<std::uint32_t>(unigram_.size() + 2));
      if (inserted) unigram_.push_back(0);
      const std::uint32_t id = it->second;
      ++unigram_[id - 2];
      auto& row = bigram_[prev];
      if (row.successors[id]++ == 0) ++row.distinct;
      ++row.total;
      prev = id;
    }
    total_ = words.tokens.size();
    std::uint64_t n1 = 0;
    for (auto c : unigram_) n1 += c == 1;
    singletons_ = std::max<std::uint64_t>(n1, 1);
  }

  double discount() const { return discount_; }
  std::size_t vocabulary_size() const { return unigram_.size(); }

  // kUnknown for words outside the vocabulary.
  std::uint32_t id(std::string_view word) const {
    auto it = ids_.find(std::string(word));
    return it == ids_.end() ? kUnknown : it->second;
  }

  std::uint64_t count(std::string_view prev, std::string_view next) const {
    const auto v = id(prev), w = id(next);
    if (v == kUnknown || w == kUnknown) return 0;
    return raw_count(v, w);
  }

  double unigram(std::uint32_t w) const {
    const double denom = static_cast<double>(total_ + singletons_);
    if (w == kUnknown) return static_cast<double>(singletons_) / denom;
    return static_cast<double>(unigram_[w - 2]) / denom;
  }

  // P(w | v) on ids; v may be kStart or kUnknown.
  double prob(std::uint32_t v, std::uint32_t w) const {
    auto it = bigram_.find(v);
    if (it == bigram_.end()) return unigram(w);
    const auto& row = it->second;
    const double cv = static_cast<double>(row.total);
    double p = discount_ * static_cast<double>(row.distinct) / cv * unigram(w);
    if (w != kUnknown) {
      auto s = row.successors.find(w);
      if (s != row.successors.end()) {
        p += std::max(static_cast<double>(s->second) - discount_, 0.0) / cv;
      }
    }
    return p;
  }

  // Conditional probability; nullopt context means sentence start.
  double conditional(std::optional<std::string_view> prev, std::string_view word) const {
    return prob(prev ? id(*prev) : kStart, id(word));
  }

 private:
  struct Row {
    std::unordered_map<std::uint32_t, std::uint64_t> successors;
    std::uint64_t total = 0;
    std::uint64_t distinct = 0;
  };

  std::uint64_t raw_count(std::uint32_t v, std::uint32_t w) const {
    auto it = bigram_.find(v);
    if (it == bigram_.end()) return 0;
    auto s = it->second.successors.find(w);
    return s == it->second.successors.end() ? 0 : s->second;
  }

  double discount_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::uint64_t> unigram_;  // indexed by id - 2
  std::unordered_map<std::uint32_t, Row> bigram_;
  std::uint64_t total_ = 0;
  std::uint64_t singletons_ = 1;
};

inline BigramLM train_bigram(const WordStream& words,
                             double discount = BigramLM::kDefaultDiscount) {
  return BigramLM(words, discount);
}

template <typename LM>
concept ConditionalWordModel = requires(const LM& lm, std::optional<std::string_view> prev,
                                        std::string_view w) {
  { lm.conditional(prev, w) } -> std::convertible_to<double>;
};

// 2^(-(1/t) sum log2 P(w_i | w_{i-1})), the first word conditioned on the
// sentence start.
template <ConditionalWordModel LM>
double perplexity(const LM& lm, const WordStream& words) {
  if (words.tokens.empty()) throw ArgumentError("perplexity of an empty stream");
  double log_sum = 0;
  std::optional<std::string_view> prev;
  for (const auto& w : words.tokens) {
    log_sum += std::log2(lm.conditional(prev, w));
    prev = w;
  }
  return std::exp2(-log_sum / static_cast<double>(words.tokens.size()));
}

}  // namespace lingstat
