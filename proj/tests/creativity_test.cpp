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

#include <algorithm>
#include <string>

#include "lingstat/creativity.hpp"
#include "lingstat/markov.hpp"
#include "lingstat/random.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace lingstat {
namespace {

using testing::brute_lcs;
using testing::random_string;

TEST(SuffixIndex, AcceptsExactlySubstrings) {
  SuffixIndex idx(Corpus::from_text(U"abc"));
  for (auto s : {U"a", U"b", U"c", U"ab", U"bc", U"abc", U""}) {
    EXPECT_TRUE(idx.contains(std::u32string_view(s)));
  }
  for (auto s : {U"ac", U"ba", U"abcd", U"d", U"cb"}) {
    EXPECT_FALSE(idx.contains(std::u32string_view(s)));
  }
}

TEST(SuffixIndex, StateBound) {
  EXPECT_LE(SuffixIndex(Corpus::from_text(U"aaaa")).state_count(), 8u);
  auto text = testing::iid_text(5000, U"ab", 3);
  EXPECT_LE(SuffixIndex(text).state_count(), 2 * text.size());
}

TEST(SuffixIndex, MembershipMatchesNaiveSearch) {
  Rng rng(99);
  const std::u32string text = random_string(rng, 10000, U"abcd");
  SuffixIndex idx(Corpus::from_text(text));
  int hits = 0;
  for (int q = 0; q < 1000; ++q) {
    std::u32string pattern;
    if (q % 2 == 0) {
      const auto len = 1 + rng.below(12);
      const auto pos = rng.below(text.size() - len);
      pattern = text.substr(pos, len);
    } else {
      pattern = random_string(rng, 1 + rng.below(12), U"abcd");
    }
    const bool want = text.find(pattern) != std::u32string::npos;
    hits += want;
    EXPECT_EQ(idx.contains(std::u32string_view(pattern)), want) << q;
  }
  EXPECT_GT(hits, 500);
  EXPECT_LT(hits, 1000);
}

TEST(Lcs, HandCases) {
  auto r = longest_common_substring(Corpus::from_text(U"abc"), Corpus::from_text(U"xbcy"));
  EXPECT_EQ(r.length, 2u);
  EXPECT_EQ(r.text_offset, 1u);
  EXPECT_EQ(r.corpus_offset, 1u);
  EXPECT_EQ(longest_common_substring(Corpus::from_text(U"abc"), Corpus::from_text(U"xyz")).length,
            0u);
}

TEST(Lcs, ExcerptIsFullLength) {
  auto corpus = testing::iid_text(20000, U"abcdefgh ", 4);
  const auto excerpt = corpus.text().substr(777, 50);
  auto r = longest_common_substring(Corpus::from_text(excerpt), corpus);
  EXPECT_EQ(r.length, 50u);
  EXPECT_EQ(corpus.text().substr(r.corpus_offset, 50), excerpt);
}

TEST(Lcs, MatchesBruteForceOnRandomPairs) {
  Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    // Log-uniform lengths up to 10^4 over small alphabets.
    auto len = [&] {
      return static_cast<std::size_t>(std::pow(10.0, 4.0 * rng.uniform())) ;
    };
    const std::u32string_view alpha = trial % 3 == 0 ? U"ab" : trial % 3 == 1 ? U"abc" : U"abcdxyz";
    const auto a = random_string(rng, std::max<std::size_t>(1, len()), alpha);
    const auto b = random_string(rng, std::max<std::size_t>(1, len()), alpha.substr(trial % 2));
    auto r = longest_common_substring(Corpus::from_text(a), Corpus::from_text(b));
    ASSERT_EQ(r.length, brute_lcs(a, b)) << trial;
    EXPECT_EQ(a.substr(r.text_offset, r.length), b.substr(r.corpus_offset, r.length));
  }
}

TEST(Lcs, SymmetricAndMonotone) {
  Rng rng(5);
  const auto a = random_string(rng, 3000, U"abc");
  const auto b = random_string(rng, 4000, U"abc");
  const auto ca = Corpus::from_text(a), cb = Corpus::from_text(b);
  EXPECT_EQ(longest_common_substring(ca, cb).length, longest_common_substring(cb, ca).length);
  SuffixIndex ib(cb);
  std::size_t last = 0;
  for (std::size_t n = 100; n <= a.size(); n += 100) {
    auto len = longest_common_substring(Corpus::from_text(a.substr(0, n)), ib).length;
    EXPECT_GE(len, last);
    last = len;
  }
}

TEST(Lcs, MarkovTextsShareMoreThanTheirOrder) {
  auto corpus = testing::iid_text(30000, U"abcdefghij", 8);
  for (std::size_t m : {1, 2, 3}) {
    auto model = train_markov(corpus, m);
    auto text = generate_markov(model, corpus, 2000, std::nullopt, 40 + m);
    EXPECT_GE(longest_common_substring(text, corpus).length, m + 1);
  }
}

TEST(NgramProfile, Counts) {
  auto p = ngram_profile(Corpus::from_text(U"abab"), 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[U"ab"], 2u);
  EXPECT_EQ(p[U"ba"], 1u);
  auto h = ngram_profile(Corpus::from_text(U"hello"), 1);
  EXPECT_EQ(h[U"l"], 2u);
  EXPECT_EQ(h.size(), 4u);
  EXPECT_THROW(ngram_profile(Corpus::from_text(U"ab"), 3), ArgumentError);
  auto text = testing::iid_text(500, U"abc", 1);
  for (std::size_t n = 1; n <= 8; ++n) EXPECT_LE(ngram_profile(text, n).size(), 500 - n + 1);
}

TEST(Attribution, VerbatimExcerptScoresOne) {
  auto a = testing::iid_text(5000, U"abcdef", 1);
  auto b = testing::iid_text(5000, U"uvwxyz", 2);
  auto x = a.slice(100, 400);
  for (std::size_t n = 1; n <= 12; ++n) EXPECT_EQ(attribution_index(x, a, b, n), 1.0);
}

TEST(Attribution, AntisymmetricAndBounded) {
  auto a = testing::iid_text(8000, U"abcde ", 1);
  auto b = testing::iid_text(8000, U"abcdf ", 2);
  auto x = testing::iid_text(1000, U"abcdef ", 3);
  for (std::size_t n = 1; n <= 8; ++n) {
    const double ab = attribution_index(x, a, b, n);
    const double ba = attribution_index(x, b, a, n);
    EXPECT_EQ(ab, -ba);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Attribution, DuplicatedReferenceIsInvariant) {
  auto a = testing::iid_text(3000, U"abcde", 1);
  auto b = testing::iid_text(3000, U"abcdf", 2);
  auto x = testing::iid_text(600, U"abcdef", 3);
  auto aa = Corpus::from_text(a.text() + a.text());
  for (std::size_t n = 2; n <= 5; ++n) {
    EXPECT_DOUBLE_EQ(attribution_index(x, a, b, n), attribution_index(x, aa, b, n));
  }
}

TEST(Attribution, NothingSharedIsZero) {
  auto a = Corpus::from_text(U"aaaa");
  auto b = Corpus::from_text(U"bbbb");
  EXPECT_EQ(attribution_index(Corpus::from_text(U"zzzz"), a, b, 2), 0.0);
  EXPECT_THROW(attribution_index(Corpus::from_text(U"z"), a, b, 2), ArgumentError);
}

}  // namespace
}  // namespace lingstat
