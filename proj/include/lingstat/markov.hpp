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
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lingstat/binary_io.hpp"
#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/random.hpp"

namespace lingstat {

struct Successor {
  Symbol symbol;
  std::uint64_t count;
};

// Character m-order Markov model: for every length-m context seen in the
// training text, the counts of the character that followed it.
//
// Contexts are interned. Each one is stored once as its raw window in a
// flat pool and found through an open-addressing table of 64-bit
// fingerprints; a fingerprint hit is confirmed by comparing the window.
// Successor lists live in one CSR array sorted by symbol.
class MarkovModel {
 public:
  static constexpr std::uint32_t npos = ~std::uint32_t{0};

  MarkovModel() = default;

  std::size_t order() const { return order_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }
  std::size_t context_count() const {
    return succ_offset_.empty() ? 0 : succ_offset_.size() - 1;
  }

  std::span<const Symbol> context(std::uint32_t id) const {
    return {windows_.data() + std::size_t{id} * order_, order_};
  }

  std::span<const Successor> successors(std::uint32_t id) const {
    return {succ_.data() + succ_offset_[id],
            succ_offset_[id + 1] - succ_offset_[id]};
  }

  std::uint64_t total(std::uint32_t id) const { return totals_[id]; }

  // Context id for a window of exactly order() symbols, or npos.
  std::uint32_t find(std::span<const Symbol> window) const {
    if (window.size() != order_) {
      throw ArgumentError("context length must equal the model order");
    }
    if (slots_.empty()) return npos;
    const std::uint64_t h = fingerprint(window);
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t s = h & mask;; s = (s + 1) & mask) {
      const auto id = slots_[s];
      if (id == npos) return npos;
      if (hashes_[id] == h &&
          std::equal(window.begin(), window.end(), context(id).begin())) {
        return id;
      }
    }
  }

  // Count of `next` after `window`, 0 when either is unseen.
  std::uint64_t count(std::span<const Symbol> window, Symbol next) const {
    const auto id = find(window);
    if (id == npos) return 0;
    for (const auto& s : successors(id)) {
      if (s.symbol == next) return s.count;
    }
    return 0;
  }

  std::uint64_t total_count() const {
    return std::accumulate(totals_.begin(), totals_.end(), std::uint64_t{0});
  }

  // Successor counts of every context whose last `suffix.size()` symbols
  // equal `suffix`, summed. With an empty suffix this is the successor
  // histogram of the whole training text.
  std::vector<std::uint64_t> marginal_successors(
      std::span<const Symbol> suffix) const {
    std::vector<std::uint64_t> dense(alphabet_.size(), 0);
    const std::size_t k = suffix.size();
    for (std::uint32_t id = 0; id < context_count(); ++id) {
      auto ctx = context(id);
      if (!std::equal(suffix.begin(), suffix.end(), ctx.end() - static_cast<std::ptrdiff_t>(k))) {
        continue;
      }
      for (const auto& s : successors(id)) dense[s.symbol] += s.count;
    }
    return dense;
  }

  void save(std::ostream& out) const {
    io::Writer w(out);
    w.magic(kMagic);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(order_));
    std::vector<std::uint32_t> alpha(alphabet_.begin(), alphabet_.end());
    w.put_vector(alpha);
    w.put_vector(windows_);
    w.put_vector(succ_offset_);
    std::vector<std::uint32_t> sym;
    std::vector<std::uint64_t> cnt;
    sym.reserve(succ_.size());
    cnt.reserve(succ_.size());
    for (const auto& s : succ_) sym.push_back(s.symbol), cnt.push_back(s.count);
    w.put_vector(sym);
    w.put_vector(cnt);
    w.finish();
  }

  static MarkovModel load(std::istream& in) {
    io::Reader r(in);
    r.expect_magic(kMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
      throw FormatError("unsupported markov model version " +
                        std::to_string(version));
    }
    MarkovModel m;
    m.order_ = r.get<std::uint32_t>();
    auto alpha = r.get_vector<std::uint32_t>();
    m.alphabet_.assign(alpha.begin(), alpha.end());
    m.windows_ = r.get_vector<Symbol>();
    m.succ_offset_ = r.get_vector<std::size_t>();
    auto sym = r.get_vector<std::uint32_t>();
    auto cnt = r.get_vector<std::uint64_t>();
    if (sym.size() != cnt.size() || m.succ_offset_.empty() ||
        m.succ_offset_.back() != sym.size() ||
        m.windows_.size() != (m.succ_offset_.size() - 1) * m.order_) {
      throw FormatError("inconsistent markov model tables");
    }
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (sym[i] >= m.alphabet_.size()) throw FormatError("successor out of alphabet");
      m.succ_.push_back({sym[i], cnt[i]});
    }
    for (Symbol s : m.windows_) {
      if (s >= m.alphabet_.size()) throw FormatError("context out of alphabet");
    }
    m.rebuild_index();
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    save(out);
  }

  static MarkovModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return load(in);
  }

  static constexpr std::string_view kMagic = "LGSTMKV\n";
  static constexpr std::uint32_t kVersion = 1;

 private:
  friend MarkovModel train_markov(const Corpus&, std::size_t);

  static std::uint64_t fingerprint(std::span<const Symbol> window) {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (Symbol s : window) h = mix64(h ^ s);
    return h;
  }

  void rebuild_index() {
    const std::size_t n = context_count();
    hashes_.resize(n);
    totals_.assign(n, 0);
    std::size_t cap = 16;
    while (cap < 2 * n) cap <<= 1;
    slots_.assign(cap, npos);
    for (std::uint32_t id = 0; id < n; ++id) {
      hashes_[id] = fingerprint(context(id));
      for (const auto& s : successors(id)) totals_[id] += s.count;
      for (std::size_t s = hashes_[id] & (cap - 1);; s = (s + 1) & (cap - 1)) {
        if (slots_[s] == npos) {
          slots_[s] = id;
          break;
        }
      }
    }
  }

  std::size_t order_ = 0;
  std::vector<char32_t> alphabet_;
  std::vector<Symbol> windows_;           // context_count * order
  std::vector<std::size_t> succ_offset_;  // context_count + 1
  std::vector<Successor> succ_;
  std::vector<std::uint64_t> totals_;
  std::vector<std::uint64_t> hashes_;
  std::vector<std::uint32_t> slots_;
};

// Counts every (m+1)-window of the corpus exactly once.
inline MarkovModel train_markov(const Corpus& corpus, std::size_t order) {
  if (corpus.size() <= order) {
    throw ArgumentError("corpus of " + std::to_string(corpus.size()) +
                        " characters is too short for order " +
                        std::to_string(order));
  }
  const auto text = corpus.chars();
  const std::size_t windows = text.size() - order;

  // Intern contexts in order of first occurrence, remembering one corpus
  // offset per context.
  std::vector<std::uint32_t> ctx_of(windows);
  std::vector<std::size_t> first_offset;
  std::vector<std::uint64_t> hashes;
  std::size_t cap = 16;
  while (cap < 2 * std::min(windows, std::size_t{1} << 26)) cap <<= 1;
  std::vector<std::uint32_t> slots(cap, MarkovModel::npos);
  for (std::size_t i = 0; i < windows; ++i) {
    auto window = text.subspan(i, order);
    const auto h = MarkovModel::fingerprint(window);
    std::uint32_t id = MarkovModel::npos;
    std::size_t s = h & (cap - 1);
    for (;; s = (s + 1) & (cap - 1)) {
      const auto cand = slots[s];
      if (cand == MarkovModel::npos) break;
      if (hashes[cand] == h &&
          std::equal(window.begin(), window.end(),
                     text.begin() + static_cast<std::ptrdiff_t>(first_offset[cand]))) {
        id = cand;
        break;
      }
    }
    if (id == MarkovModel::npos) {
      id = static_cast<std::uint32_t>(first_offset.size());
      first_offset.push_back(i);
      hashes.push_back(h);
      slots[s] = id;
      if (2 * first_offset.size() > cap) {
        // Grow and reinsert.
        cap <<= 1;
        slots.assign(cap, MarkovModel::npos);
        for (std::uint32_t j = 0; j < first_offset.size(); ++j) {
          std::size_t t = hashes[j] & (cap - 1);
          while (slots[t] != MarkovModel::npos) t = (t + 1) & (cap - 1);
          slots[t] = j;
        }
      }
    }
    ctx_of[i] = id;
  }

  // Sort (context, successor) pairs and run-length them into CSR.
  std::vector<std::uint64_t> keys(windows);
  for (std::size_t i = 0; i < windows; ++i) {
    keys[i] = (std::uint64_t{ctx_of[i]} << 32) | text[i + order];
  }
  std::sort(keys.begin(), keys.end());

  MarkovModel m;
  m.order_ = order;
  m.alphabet_ = corpus.alphabet();
  const std::size_t n_ctx = first_offset.size();
  m.windows_.reserve(n_ctx * order);
  for (std::size_t off : first_offset) {
    m.windows_.insert(m.windows_.end(), text.begin() + static_cast<std::ptrdiff_t>(off),
                      text.begin() + static_cast<std::ptrdiff_t>(off + order));
  }
  m.succ_offset_.assign(n_ctx + 1, 0);
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const auto ctx = static_cast<std::uint32_t>(keys[i] >> 32);
    m.succ_.push_back({static_cast<Symbol>(keys[i] & 0xffffffffULL), j - i});
    ++m.succ_offset_[ctx + 1];
    i = j;
  }
  std::partial_sum(m.succ_offset_.begin(), m.succ_offset_.end(), m.succ_offset_.begin());
  m.rebuild_index();
  return m;
}

namespace detail {

inline Symbol draw(std::span<const std::uint64_t> dense, std::uint64_t total, Rng& rng) {
  std::uint64_t r = rng.below(total);
  for (Symbol s = 0; s < dense.size(); ++s) {
    if (r < dense[s]) return s;
    r -= dense[s];
  }
  return static_cast<Symbol>(dense.size() - 1);
}

inline Symbol draw(std::span<const Successor> succ, std::uint64_t total, Rng& rng) {
  std::uint64_t r = rng.below(total);
  for (const auto& s : succ) {
    if (r < s.count) return s.symbol;
    r -= s.count;
  }
  return succ.back().symbol;
}

// Samples the next symbol after `window`. Unseen contexts back off to
// successively shorter suffixes, ending at the unigram histogram.
inline Symbol next_symbol(const MarkovModel& model, std::span<const Symbol> window, Rng& rng) {
  const auto id = model.find(window);
  if (id != MarkovModel::npos) return draw(model.successors(id), model.total(id), rng);
  for (std::size_t k = window.size(); k-- > 0;) {
    auto dense = model.marginal_successors(window.subspan(window.size() - k));
    const auto total = std::accumulate(dense.begin(), dense.end(), std::uint64_t{0});
    if (total > 0) return draw(std::span<const std::uint64_t>(dense), total, rng);
  }
  throw ArgumentError("model has no counts");
}

inline Corpus continue_from(const MarkovModel& model, std::vector<Symbol> out,
                            std::size_t length, Rng& rng) {
  const std::size_t m = model.order();
  out.reserve(length);
  while (out.size() < length) {
    std::span<const Symbol> window(out.data() + out.size() - m, m);
    out.push_back(next_symbol(model, window, rng));
  }
  return Corpus::from_symbols(std::move(out), model.alphabet());
}

}  // namespace detail

// Generates `length` characters (seed included). The seed is the m-window
// of `corpus` at `seed_pos`, or at a uniform offset in [0, N-m] when
// seed_pos is empty.
inline Corpus generate_markov(const MarkovModel& model, const Corpus& corpus,
                              std::size_t length, std::optional<std::size_t> seed_pos,
                              std::uint64_t rng_seed) {
  const std::size_t m = model.order();
  if (corpus.alphabet() != model.alphabet()) {
    throw ArgumentError("corpus alphabet differs from the model's");
  }
  if (length < m) throw ArgumentError("length must be at least the model order");
  if (corpus.size() < m) throw ArgumentError("corpus shorter than the model order");
  Rng rng(rng_seed);
  const std::size_t pos = seed_pos ? *seed_pos : rng.below(corpus.size() - m + 1);
  if (pos + m > corpus.size()) throw ArgumentError("seed position past corpus end");
  auto seed = corpus.chars().subspan(pos, m);
  return detail::continue_from(model, {seed.begin(), seed.end()}, length, rng);
}

// Same, without the corpus: the seed is a training context drawn with
// probability proportional to its count, which is a uniform offset over
// the first N-m positions of the training text.
inline Corpus generate_markov(const MarkovModel& model, std::size_t length,
                              std::uint64_t rng_seed) {
  const std::size_t m = model.order();
  if (length < m) throw ArgumentError("length must be at least the model order");
  if (model.context_count() == 0) throw ArgumentError("model has no counts");
  Rng rng(rng_seed);
  std::uint64_t r = rng.below(model.total_count());
  std::uint32_t id = 0;
  for (; id + 1 < model.context_count(); ++id) {
    if (r < model.total(id)) break;
    r -= model.total(id);
  }
  auto seed = model.context(id);
  return detail::continue_from(model, {seed.begin(), seed.end()}, length, rng);
}

}  // namespace lingstat
