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

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"

namespace lingstat {

// Suffix automaton over a corpus. It accepts exactly the substrings of the
// indexed text and has at most 2N states. Transitions live in one shared
// edge pool as per-state singly linked lists; the root keeps a dense table
// because it is the only state whose out-degree approaches the alphabet.
//
// Queries come in as symbols of the indexed corpus. Text from another
// corpus is translated through code points first; characters missing from
// the index map to kAbsent, which matches nothing.
class SuffixIndex {
 public:
  using StateId = std::int32_t;
  static constexpr Symbol kAbsent = std::numeric_limits<Symbol>::max();
  static constexpr StateId kRoot = 0;
  static constexpr StateId kNone = -1;

  explicit SuffixIndex(const Corpus& corpus)
      : alphabet_(corpus.alphabet()), root_edges_(alphabet_.size(), kNone) {
    if (corpus.empty()) throw ArgumentError("cannot index an empty corpus");
    if (corpus.size() > static_cast<std::size_t>(std::numeric_limits<StateId>::max() / 2)) {
      throw ArgumentError("corpus too large to index");
    }
    for (Symbol i = 0; i < alphabet_.size(); ++i) lookup_.emplace(alphabet_[i], i);
    const std::size_t n = corpus.size();
    states_.reserve(2 * n);
    edges_.reserve(3 * n);
    states_.push_back({0, kNone, -1, kNone});
    StateId last = kRoot;
    for (std::size_t i = 0; i < n; ++i) last = extend(last, corpus[i], static_cast<std::int32_t>(i));
    text_length_ = n;
  }

  std::size_t state_count() const { return states_.size(); }
  std::size_t text_length() const { return text_length_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }

  std::int32_t length(StateId s) const { return states_[s].len; }
  StateId link(StateId s) const { return states_[s].link; }
  // End position of the first occurrence of the strings in state s.
  std::int32_t first_end(StateId s) const { return states_[s].first_end; }

  StateId next(StateId s, Symbol c) const {
    if (c == kAbsent) return kNone;
    if (s == kRoot) return c < root_edges_.size() ? root_edges_[c] : kNone;
    for (auto e = states_[s].head; e != kNone; e = edges_[e].next) {
      if (edges_[e].symbol == c) return edges_[e].target;
    }
    return kNone;
  }

  Symbol symbol_of(char32_t cp) const {
    auto it = lookup_.find(cp);
    return it == lookup_.end() ? kAbsent : it->second;
  }

  // Symbols of `text` in this index's symbol space.
  std::vector<Symbol> translate(const Corpus& text) const {
    std::vector<Symbol> per(text.alphabet_size(), kAbsent);
    for (std::size_t s = 0; s < per.size(); ++s) {
      per[s] = symbol_of(text.alphabet()[s]);
    }
    std::vector<Symbol> out;
    out.reserve(text.size());
    for (auto s : text.chars()) out.push_back(per[s]);
    return out;
  }

  bool contains(std::span<const Symbol> pattern) const {
    StateId s = kRoot;
    for (auto c : pattern) {
      s = next(s, c);
      if (s == kNone) return false;
    }
    return true;
  }

  bool contains(std::u32string_view pattern) const {
    StateId s = kRoot;
    for (char32_t cp : pattern) {
      s = next(s, symbol_of(cp));
      if (s == kNone) return false;
    }
    return true;
  }

 private:
  struct State {
    std::int32_t len;
    StateId link;
    std::int32_t first_end;
    std::int32_t head;  // first edge, or kNone
  };
  struct Edge {
    Symbol symbol;
    StateId target;
    std::int32_t next;
  };

  void set_edge(StateId s, Symbol c, StateId target) {
    if (s == kRoot) {
      root_edges_[c] = target;
      return;
    }
    for (auto e = states_[s].head; e != kNone; e = edges_[e].next) {
      if (edges_[e].symbol == c) {
        edges_[e].target = target;
        return;
      }
    }
    edges_.push_back({c, target, states_[s].head});
    states_[s].head = static_cast<std::int32_t>(edges_.size() - 1);
  }

  StateId clone(StateId q, std::int32_t len) {
    const StateId id = static_cast<StateId>(states_.size());
    states_.push_back({len, states_[q].link, states_[q].first_end, kNone});
    for (auto e = states_[q].head; e != kNone; e = edges_[e].next) {
      edges_.push_back({edges_[e].symbol, edges_[e].target, states_[id].head});
      states_[id].head = static_cast<std::int32_t>(edges_.size() - 1);
    }
    return id;
  }

  StateId extend(StateId last, Symbol c, std::int32_t pos) {
    const StateId cur = static_cast<StateId>(states_.size());
    states_.push_back({states_[last].len + 1, kNone, pos, kNone});
    StateId p = last;
    while (p != kNone && next(p, c) == kNone) {
      set_edge(p, c, cur);
      p = states_[p].link;
    }
    if (p == kNone) {
      states_[cur].link = kRoot;
      return cur;
    }
    const StateId q = next(p, c);
    if (states_[p].len + 1 == states_[q].len) {
      states_[cur].link = q;
      return cur;
    }
    const StateId cl = clone(q, states_[p].len + 1);
    while (p != kNone && next(p, c) == q) {
      set_edge(p, c, cl);
      p = states_[p].link;
    }
    states_[q].link = cl;
    states_[cur].link = cl;
    return cur;
  }

  std::vector<char32_t> alphabet_;
  std::unordered_map<char32_t, Symbol> lookup_;
  std::vector<StateId> root_edges_;
  std::vector<State> states_;
  std::vector<Edge> edges_;
  std::size_t text_length_ = 0;
};

inline SuffixIndex build_suffix_index(const Corpus& corpus) { return SuffixIndex(corpus); }

}  // namespace lingstat
