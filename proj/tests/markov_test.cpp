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

#include <map>
#include <set>
#include <sstream>

#include "lingstat/markov.hpp"

namespace lingstat {
namespace {

std::vector<Symbol> sym(const Corpus& c, std::u32string_view s) {
  std::vector<Symbol> out;
  for (char32_t cp : s) out.push_back(*c.symbol_of(cp));
  return out;
}

TEST(TrainMarkov, HandCountedOrderOne) {
  auto c = Corpus::from_utf8("abab");
  auto m = train_markov(c, 1);
  EXPECT_EQ(m.context_count(), 2u);
  EXPECT_EQ(m.count(sym(c, U"a"), *c.symbol_of(U'b')), 2u);
  EXPECT_EQ(m.count(sym(c, U"b"), *c.symbol_of(U'a')), 1u);
  EXPECT_EQ(m.count(sym(c, U"a"), *c.symbol_of(U'a')), 0u);
  EXPECT_EQ(m.total_count(), 3u);
}

TEST(TrainMarkov, RepeatedCharacter) {
  auto c = Corpus::from_utf8("aaaa");
  auto m = train_markov(c, 2);
  EXPECT_EQ(m.context_count(), 1u);
  EXPECT_EQ(m.count(sym(c, U"aa"), 0), 2u);
}

TEST(TrainMarkov, OrderZeroIsUnigram) {
  auto c = Corpus::from_utf8("abcab");
  auto m = train_markov(c, 0);
  ASSERT_EQ(m.context_count(), 1u);
  EXPECT_EQ(m.count({}, *c.symbol_of(U'a')), 2u);
  EXPECT_EQ(m.count({}, *c.symbol_of(U'b')), 2u);
  EXPECT_EQ(m.count({}, *c.symbol_of(U'c')), 1u);
}

TEST(TrainMarkov, TooShortCorpus) {
  EXPECT_THROW(train_markov(Corpus::from_utf8("abc"), 3), ArgumentError);
  EXPECT_NO_THROW(train_markov(Corpus::from_utf8("abcd"), 3));
}

TEST(TrainMarkov, TableInvariants) {
  auto c = Corpus::from_utf8(
      "It was the best of times, it was the worst of times, it was the age of wisdom.");
  for (std::size_t m : {0u, 1u, 2u, 4u, 8u, 12u}) {
    auto model = train_markov(c, m);
    EXPECT_EQ(model.total_count(), c.size() - m);
    std::set<std::vector<Symbol>> distinct;
    for (std::uint32_t id = 0; id < model.context_count(); ++id) {
      ASSERT_EQ(model.context(id).size(), m);
      distinct.emplace(model.context(id).begin(), model.context(id).end());
      for (const auto& s : model.successors(id)) EXPECT_GE(s.count, 1u);
      EXPECT_EQ(model.find(model.context(id)), id);
    }
    EXPECT_EQ(distinct.size(), model.context_count());
  }
}

TEST(GenerateMarkov, SingleSuccessorChainIsDeterministic) {
  auto c = Corpus::from_utf8("abcabcabc");
  auto m = train_markov(c, 2);
  auto out = generate_markov(m, c, 8, 0, 1);
  EXPECT_EQ(out.text(), U"abcabcab");
  EXPECT_EQ(out.size(), 8u);
}

TEST(GenerateMarkov, LengthIncludesSeed) {
  auto c = Corpus::from_utf8("hello world, hello there");
  auto m = train_markov(c, 3);
  EXPECT_EQ(generate_markov(m, c, 3, 0, 9).text(), U"hel");
  EXPECT_EQ(generate_markov(m, c, 50, std::nullopt, 9).size(), 50u);
  EXPECT_THROW(generate_markov(m, c, 2, 0, 9), ArgumentError);
}

TEST(GenerateMarkov, ClosureOverTrainingWindows) {
  auto c = Corpus::from_utf8(
      "Whan that Aprille with his shoures soote the droghte of March hath "
      "perced to the roote, and bathed every veyne in swich licour of which "
      "vertu engendred is the flour; whan Zephirus eek with his swete breeth "
      "inspired hath in every holt and heeth the tendre croppes. Whan that");
  const auto text = c.text();
  for (std::size_t m : {1u, 2u, 3u, 5u}) {
    auto model = train_markov(c, m);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      // The final 5-window also occurs earlier, so no context is a dead end.
      auto out = generate_markov(model, c, 400, seed * 7 % (c.size() - m - 1), seed);
      auto s = out.text();
      for (std::size_t i = 0; i + m + 1 <= s.size(); ++i) {
        ASSERT_NE(text.find(s.substr(i, m + 1)), std::u32string::npos)
            << "order " << m << " window at " << i;
      }
    }
  }
}

TEST(GenerateMarkov, BacksOffFromCorpusFinalContext) {
  // "xyz" only occurs at the very end, so it has no successors.
  auto c = Corpus::from_utf8("abababxyz");
  auto m = train_markov(c, 3);
  ASSERT_EQ(m.find(sym(c, U"xyz")), MarkovModel::npos);
  auto out = generate_markov(m, c, 20, c.size() - 3, 4);
  EXPECT_EQ(out.size(), 20u);
  EXPECT_EQ(out.text().substr(0, 3), U"xyz");
}

TEST(GenerateMarkov, BackoffUsesSuffixCounts) {
  // Order 2 on "aXbcYb": context "Yb" is final. Its 1-suffix "b" was followed
  // by 'c' once (in "Xbc"), so the next draw must be 'c'.
  auto c = Corpus::from_utf8("aXbcYb");
  auto m = train_markov(c, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(generate_markov(m, c, 3, 4, seed).text(), U"Ybc");
  }
}

TEST(GenerateMarkov, DeterministicPerSeed) {
  auto c = Corpus::from_utf8("the cat sat on the mat and the rat ate the hat");
  auto m = train_markov(c, 2);
  EXPECT_EQ(generate_markov(m, c, 200, std::nullopt, 11),
            generate_markov(m, c, 200, std::nullopt, 11));
  EXPECT_NE(generate_markov(m, c, 200, std::nullopt, 11),
            generate_markov(m, c, 200, std::nullopt, 12));
}

TEST(GenerateMarkov, SuccessorFrequenciesMatchCounts) {
  // Context "a" is followed by b x7, c x3, a x2 (the final 'a' has no
  // successor).
  auto c = Corpus::from_utf8("abacabababacabacabaaaba");
  auto m = train_markov(c, 1);
  const auto a = sym(c, U"a");
  const auto id = m.find(a);
  ASSERT_NE(id, MarkovModel::npos);
  std::map<Symbol, double> expected;
  for (const auto& s : m.successors(id)) {
    expected[s.symbol] = static_cast<double>(s.count) / static_cast<double>(m.total(id));
  }
  ASSERT_EQ(expected.size(), 3u);

  const int draws = 30000;
  std::map<Symbol, int> seen;
  for (int t = 0; t < draws; ++t) {
    auto out = generate_markov(m, c, 2, 0, static_cast<std::uint64_t>(t) + 1000);
    ++seen[out[1]];
  }
  double chi2 = 0;
  for (auto [s, p] : expected) {
    const double e = p * draws;
    chi2 += (seen[s] - e) * (seen[s] - e) / e;
  }
  // 2 degrees of freedom, 99.9th percentile is 13.8.
  EXPECT_LT(chi2, 13.8);
}

TEST(GenerateMarkov, WithoutCorpusSeedsFromContexts) {
  auto c = Corpus::from_utf8("mississippi river banks");
  auto m = train_markov(c, 2);
  auto out = generate_markov(m, 30, 3);
  EXPECT_EQ(out.size(), 30u);
  const auto text = c.text();
  auto s = out.text();
  EXPECT_NE(text.find(s.substr(0, 2)), std::u32string::npos);
}

TEST(MarkovModel, SaveLoadRoundTrip) {
  auto c = Corpus::from_utf8("sphinx of black quartz, judge my vow; sphinx of black");
  auto m = train_markov(c, 3);
  std::stringstream buf;
  m.save(buf);
  auto back = MarkovModel::load(buf);
  EXPECT_EQ(back.order(), 3u);
  EXPECT_EQ(back.alphabet(), m.alphabet());
  EXPECT_EQ(back.context_count(), m.context_count());
  EXPECT_EQ(back.total_count(), m.total_count());
  EXPECT_EQ(generate_markov(back, c, 100, 0, 5), generate_markov(m, c, 100, 0, 5));
}

TEST(MarkovModel, LoadRejectsGarbage) {
  std::stringstream buf("not a model");
  EXPECT_THROW(MarkovModel::load(buf), FormatError);
}

}  // namespace
}  // namespace lingstat
