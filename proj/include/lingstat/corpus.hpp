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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lingstat/chars.hpp"
#include "lingstat/error.hpp"
#include "lingstat/random.hpp"
#include "lingstat/utf8.hpp"

namespace lingstat {

using Symbol = std::uint32_t;

struct NormalizationConfig {
  bool lowercase = false;
  bool collapse_blank_lines = true;
};

struct RawDocument {
  std::string path;
  std::string bytes;
};

// A text as a sequence of indices into its own alphabet.
//
// Corpora built from text list the alphabet in first-occurrence order.
// Corpora derived from another one (shuffle, split, slice) keep the
// parent's alphabet so symbol indices stay comparable.
class Corpus {
 public:
  Corpus() = default;

  static Corpus from_text(std::u32string_view text) {
    Corpus c;
    c.chars_.reserve(text.size());
    for (char32_t cp : text) {
      auto [it, inserted] = c.lookup_.try_emplace(
          cp, static_cast<Symbol>(c.alphabet_.size()));
      if (inserted) c.alphabet_.push_back(cp);
      c.chars_.push_back(it->second);
    }
    return c;
  }

  static Corpus from_utf8(std::string_view bytes) {
    auto decoded = utf8::decode(bytes);
    if (decoded.error_offset) {
      throw FormatError("invalid UTF-8 at byte offset " +
                        std::to_string(*decoded.error_offset));
    }
    return from_text(decoded.text);
  }

  // Adopts an explicit alphabet; every symbol must index into it.
  static Corpus from_symbols(std::vector<Symbol> chars,
                             std::vector<char32_t> alphabet) {
    Corpus c;
    c.alphabet_ = std::move(alphabet);
    for (Symbol i = 0; i < c.alphabet_.size(); ++i) {
      if (!c.lookup_.emplace(c.alphabet_[i], i).second) {
        throw ArgumentError("alphabet has duplicate entries");
      }
    }
    for (Symbol s : chars) {
      if (s >= c.alphabet_.size()) {
        throw ArgumentError("symbol index out of alphabet range");
      }
    }
    c.chars_ = std::move(chars);
    return c;
  }

  std::span<const Symbol> chars() const { return chars_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }
  std::size_t size() const { return chars_.size(); }
  bool empty() const { return chars_.empty(); }
  std::size_t alphabet_size() const { return alphabet_.size(); }

  Symbol operator[](std::size_t i) const { return chars_[i]; }
  char32_t code_point(std::size_t i) const { return alphabet_[chars_[i]]; }

  std::optional<Symbol> symbol_of(char32_t cp) const {
    auto it = lookup_.find(cp);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  std::u32string text() const { return text(0, chars_.size()); }

  std::u32string text(std::size_t pos, std::size_t len) const {
    std::u32string out;
    len = std::min(len, chars_.size() - std::min(pos, chars_.size()));
    out.reserve(len);
    for (std::size_t i = pos; i < pos + len; ++i) out.push_back(code_point(i));
    return out;
  }

  std::string utf8() const { return utf8::encode(text()); }

  // Contiguous piece sharing this corpus' alphabet.
  Corpus slice(std::size_t pos, std::size_t len) const {
    Corpus c;
    c.alphabet_ = alphabet_;
    c.lookup_ = lookup_;
    pos = std::min(pos, chars_.size());
    len = std::min(len, chars_.size() - pos);
    c.chars_.assign(chars_.begin() + static_cast<std::ptrdiff_t>(pos),
                    chars_.begin() + static_cast<std::ptrdiff_t>(pos + len));
    return c;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.chars_ == b.chars_ && a.alphabet_ == b.alphabet_;
  }

 private:
  std::vector<Symbol> chars_;
  std::vector<char32_t> alphabet_;
  std::unordered_map<char32_t, Symbol> lookup_;
};

struct WordStream {
  std::vector<std::string> tokens;
  std::size_t token_count() const { return tokens.size(); }
};

// CR and CRLF become LF, runs of three or more blank lines shrink to one,
// and letters are optionally lowercased. Idempotent.
inline std::u32string normalize(std::u32string_view in,
                                const NormalizationConfig& config) {
  std::u32string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    char32_t c = in[i];
    if (c == U'\r') {
      if (i + 1 < in.size() && in[i + 1] == U'\n') ++i;
      c = U'\n';
    }
    out.push_back(config.lowercase ? chars::to_lower(c) : c);
  }
  if (!config.collapse_blank_lines) return out;

  // k consecutive newlines hold k-1 blank lines.
  std::u32string collapsed;
  collapsed.reserve(out.size());
  for (std::size_t i = 0; i < out.size();) {
    if (out[i] != U'\n') {
      collapsed.push_back(out[i++]);
      continue;
    }
    std::size_t run = 0;
    while (i < out.size() && out[i] == U'\n') ++run, ++i;
    collapsed.append(run >= 4 ? 2 : run, U'\n');
  }
  return collapsed;
}

inline RawDocument read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return {path, std::move(ss).str()};
}

// Directories stand for the .txt files directly inside them, in name order.
inline std::vector<std::string> expand_paths(std::span<const std::string> paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (!std::filesystem::is_directory(p)) {
      out.push_back(p);
      continue;
    }
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(p)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path().string());
    }
    if (files.empty()) throw IoError("no .txt files in directory '" + p + "'");
    std::sort(files.begin(), files.end());
    out.insert(out.end(), files.begin(), files.end());
  }
  return out;
}

inline Corpus ingest(std::span<const RawDocument> docs,
                     const NormalizationConfig& config = {}) {
  if (docs.empty()) throw ArgumentError("no input");
  std::u32string joined;
  for (const auto& doc : docs) {
    auto decoded = utf8::decode(doc.bytes);
    if (decoded.error_offset) {
      throw FormatError("'" + doc.path + "': invalid UTF-8 at byte offset " +
                        std::to_string(*decoded.error_offset));
    }
    if (!joined.empty() && joined.back() != U'\n' && !decoded.text.empty()) {
      joined.push_back(U'\n');
    }
    joined += decoded.text;
  }
  return Corpus::from_text(normalize(joined, config));
}

inline Corpus ingest(std::span<const std::string> paths,
                     const NormalizationConfig& config = {}) {
  if (paths.empty()) throw ArgumentError("no input");
  std::vector<RawDocument> docs;
  for (const auto& p : expand_paths(paths)) docs.push_back(read_document(p));
  return ingest(std::span<const RawDocument>(docs), config);
}

inline Corpus ingest(std::initializer_list<std::string> paths,
                     const NormalizationConfig& config = {}) {
  std::vector<std::string> v(paths);
  return ingest(std::span<const std::string>(v), config);
}

// Maximal runs of letters, with apostrophes kept only between two letters.
// Tokens are lowercased.
inline WordStream tokenize_words(const Corpus& corpus) {
  WordStream ws;
  const auto& alpha = corpus.alphabet();
  std::vector<char> letter(alpha.size()), apostrophe(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    letter[i] = chars::is_letter(alpha[i]);
    apostrophe[i] = chars::is_apostrophe(alpha[i]);
  }
  const auto s = corpus.chars();
  std::string word;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (letter[s[i]]) {
      utf8::append(word, chars::to_lower(alpha[s[i]]));
    } else if (apostrophe[s[i]] && !word.empty() && i + 1 < s.size() &&
               letter[s[i + 1]]) {
      utf8::append(word, alpha[s[i]]);
    } else if (!word.empty()) {
      ws.tokens.push_back(std::move(word));
      word.clear();
    }
  }
  if (!word.empty()) ws.tokens.push_back(std::move(word));
  return ws;
}

inline Corpus shuffle_chars(const Corpus& corpus, std::uint64_t seed) {
  std::vector<Symbol> chars(corpus.chars().begin(), corpus.chars().end());
  Rng rng(seed);
  shuffle(chars.begin(), chars.end(), rng);
  return Corpus::from_symbols(std::move(chars), corpus.alphabet());
}

// The validation part is the trailing round(N * fraction) characters,
// clamped so both parts are non-empty.
inline std::pair<Corpus, Corpus> split(const Corpus& corpus,
                                       double validation_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ArgumentError("validation fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  if (n < 2) throw ArgumentError("corpus needs at least 2 characters to split");
  auto n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * validation_fraction));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  return {corpus.slice(0, n - n_val), corpus.slice(n - n_val, n_val)};
}

}  // namespace lingstat
