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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "lingstat/infotheory.hpp"
#include "lingstat/random.hpp"
#include "synthetic.hpp"

namespace lingstat {
namespace {

// Longest j < i match at every i by direct comparison.
std::vector<std::uint32_t> naive_lpf(const std::u32string& s) {
  std::vector<std::uint32_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < i; ++j) {
      std::size_t l = 0;
      while (i + l < s.size() && s[j + l] == s[i + l]) ++l;
      best = std::max(best, l);
    }
    out[i] = static_cast<std::uint32_t>(best);
  }
  return out;
}

WordStream words(std::initializer_list<const char*> w) {
  WordStream ws;
  for (auto* s : w) ws.tokens.emplace_back(s);
  return ws;
}

TEST(LongestPreviousFactor, MatchesNaiveScan) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::u32string s(1 + rng.below(300), U'a');
    const std::size_t k = 1 + rng.below(4);
    for (auto& c : s) c = U'a' + static_cast<char32_t>(rng.below(k));
    ASSERT_EQ(longest_previous_factor(Corpus::from_text(s)), naive_lpf(s)) << trial;
  }
  EXPECT_EQ(longest_previous_factor(Corpus::from_text(U"aaaa")),
            (std::vector<std::uint32_t>{0, 3, 2, 1}));
  EXPECT_EQ(longest_previous_factor(Corpus::from_text(U"abab")),
            (std::vector<std::uint32_t>{0, 0, 2, 1}));
}

TEST(Entropy, ConstantTextIsZero) {
  auto e = entropy_rate(Corpus::from_text(std::u32string(100000, U'a')));
  EXPECT_LT(e.bits_per_char, 0.01);
}

TEST(Entropy, UniformBinaryIsOneBit) {
  auto e = entropy_rate(testing::iid_text(1000000, U"01", 7));
  EXPECT_NEAR(e.bits_per_char, 1.0, 0.05);
  EXPECT_EQ(e.sample_length, 1000000u);
  EXPECT_FALSE(e.short_sample);
}

TEST(Entropy, UniformQuaternaryIsTwoBits) {
  auto e = entropy_rate(testing::iid_text(1000000, U"acgt", 8));
  EXPECT_NEAR(e.bits_per_char, 2.0, 0.1);
}

TEST(Entropy, InvariantUnderRelabeling) {
  auto a = testing::iid_text(50000, U"abc", 3);
  std::u32string t = a.text();
  for (auto& c : t) c = c == U'a' ? U'x' : c == U'b' ? U'a' : U'q';
  EXPECT_DOUBLE_EQ(entropy_rate(a).bits_per_char,
                   entropy_rate(Corpus::from_text(t)).bits_per_char);
}

TEST(Entropy, ShortInputRejected) {
  EXPECT_THROW(entropy_rate(testing::iid_text(9999, U"ab", 1)), ArgumentError);
  EXPECT_TRUE(entropy_rate(testing::iid_text(20000, U"ab", 1)).short_sample);
}

TEST(Entropy, ShortestAbsentStatisticIsLower) {
  auto text = testing::iid_text(200000, U"01", 9);
  EntropyOptions alt;
  alt.statistic = MatchStatistic::shortest_absent;
  EXPECT_LT(entropy_rate(text, alt).bits_per_char, entropy_rate(text).bits_per_char);
}

TEST(CrossParse, HandCount) {
  SuffixIndex b(Corpus::from_text(U"abcab"));
  // Greedy parse: "abcab" | "c" | "z", the last one unseen in B.
  auto a = Corpus::from_text(U"abcabcz");
  EXPECT_EQ(cross_parse_phrases(b.translate(a), b), 3u);
}

TEST(Divergence, SelfHalvesNearZero) {
  auto text = testing::iid_text(400000, U"abcdefgh", 10);
  auto [a, b] = split(text, 0.5);
  auto r = cross_divergence(a, b);
  EXPECT_NEAR(r.symmetrized, 0.0, 0.1);
  EXPECT_EQ(r.symmetrized, (r.kl_ab + r.kl_ba) / 2);
}

TEST(Divergence, DisjointAlphabetsFarApart) {
  auto a = testing::iid_text(50000, U"abcd", 1);
  auto b = testing::iid_text(50000, U"wxyz", 2);
  EXPECT_GT(cross_divergence(a, b).symmetrized, 1.0);
}

TEST(Bigram, RawCounts) {
  auto lm = train_bigram(words({"a", "b", "a", "b"}));
  EXPECT_EQ(lm.count("a", "b"), 2u);
  EXPECT_EQ(lm.count("b", "a"), 1u);
  EXPECT_EQ(lm.count("b", "b"), 0u);
  EXPECT_THROW(train_bigram(WordStream{}), ArgumentError);
}

TEST(Bigram, HandComputedOracle) {
  // Tokens a b a b: T = 4, no singletons so the unknown reserve is 1.
  //   P_uni(a) = P_uni(b) = 2/5, P_uni(<unk>) = 1/5
  // Context a: c(a) = 2, one distinct successor, c(a,b) = 2.
  //   P(b|a)     = 1.25/2 + 0.75*1/2*2/5 = 0.775
  //   P(a|a)     = 0.375 * 2/5           = 0.15
  //   P(<unk>|a) = 0.375 * 1/5           = 0.075
  // Context b: c(b) = 1 (the final b opens nothing), successor a.
  //   P(a|b) = 0.25 + 0.75*2/5 = 0.55
  // Start: one sentence, successor a.
  //   P(a|<s>) = 0.55, P(b|<s>) = 0.3
  auto lm = train_bigram(words({"a", "b", "a", "b"}));
  EXPECT_NEAR(lm.conditional("a", "b"), 0.775, 1e-12);
  EXPECT_NEAR(lm.conditional("a", "a"), 0.15, 1e-12);
  EXPECT_NEAR(lm.conditional("a", "zzz"), 0.075, 1e-12);
  EXPECT_NEAR(lm.conditional("b", "a"), 0.55, 1e-12);
  EXPECT_NEAR(lm.conditional(std::nullopt, "a"), 0.55, 1e-12);
  EXPECT_NEAR(lm.conditional(std::nullopt, "b"), 0.3, 1e-12);
  EXPECT_NEAR(lm.conditional("zzz", "a"), 0.4, 1e-12);
  const double want = std::exp2(-(std::log2(0.55) + std::log2(0.775) + std::log2(0.55) +
                                  std::log2(0.775)) / 4);
  EXPECT_NEAR(perplexity(lm, words({"a", "b", "a", "b"})), want, 1e-9);
}

TEST(Bigram, ConditionalsSumToOne) {
  auto ws = testing::zipf_words(1.0, 300, 5000, 4);
  auto lm = train_bigram(ws);
  std::vector<std::string> vocab;
  for (const auto& e : std::set<std::string>(ws.tokens.begin(), ws.tokens.end())) vocab.push_back(e);
  std::vector<std::optional<std::string_view>> contexts{std::nullopt, "w1", "w7", "w250",
                                                        "never-seen"};
  for (const auto& ctx : contexts) {
    double sum = lm.conditional(ctx, "<<unknown>>");
    for (const auto& w : vocab) sum += lm.conditional(ctx, w);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Bigram, DeterministicPatternNearOne) {
  WordStream ws;
  for (int i = 0; i < 5000; ++i) ws.tokens.push_back(i % 2 ? "b" : "a");
  auto lm = train_bigram(ws);
  EXPECT_LT(perplexity(lm, ws), 1.01);
}

struct UniformLM {
  double v;
  double conditional(std::optional<std::string_view>, std::string_view) const { return 1 / v; }
};

TEST(Perplexity, UniformModelGivesVocabularySize) {
  auto ws = testing::zipf_words(1.0, 100, 1000, 2);
  for (double v : {1.0, 2.0, 37.0, 1000.0}) EXPECT_NEAR(perplexity(UniformLM{v}, ws), v, 1e-9 * v);
}

}  // namespace
}  // namespace lingstat
