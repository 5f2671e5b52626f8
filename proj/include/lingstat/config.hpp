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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "lingstat/corpus.hpp"
#include "lingstat/dfa.hpp"
#include "lingstat/error.hpp"
#include "lingstat/lstm.hpp"
#include "lingstat/power_law.hpp"
#include "lingstat/wordstats.hpp"

namespace lingstat {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"zipf",       "heaps",      "dfa", "entropy",
                                              "divergence", "perplexity", "lcs", "attribution"};
  return names;
}

struct RunConfig {
  std::vector<std::string> corpus;
  std::vector<std::string> reference;  // second author, for attribution
  NormalizationConfig normalization;

  std::vector<std::size_t> markov_orders;
  std::optional<TrainConfig> lstm;
  std::vector<double> temperatures;
  std::size_t samples = 1;
  std::size_t sample_length = 100000;
  std::size_t seed_length = 100;  // LSTM prompt cut from the corpus

  std::vector<std::string> analyses{"zipf", "heaps", "dfa", "entropy", "divergence",
                                    "perplexity", "lcs"};
  FitWindow zipf_window = kZipfWindow;
  double heaps_fit_start = kHeapsFitStart;
  FitWindow dfa_window = kDfaWindow;
  Mapping dfa_mapping = Mapping::space_indicator;
  std::size_t dfa_min_scale = 10;
  std::size_t dfa_max_scale = 0;  // 0: a quarter of each text
  std::size_t dfa_scale_count = 20;
  std::size_t dfa_order = 1;
  std::size_t entropy_length = 0;  // 0: whole text
  std::vector<std::size_t> attribution_ngrams{2, 3, 4, 5, 6, 7, 8};

  std::uint64_t seed = 1;
  std::string output_dir = "out";

  bool wants(std::string_view analysis) const {
    for (const auto& a : analyses) {
      if (a == analysis) return true;
    }
    return false;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (corpus.empty()) fail("corpus: at least one path is required");
    for (auto m : markov_orders) {
      if (m < 1) fail("generator.markov_orders: orders must be at least 1");
    }
    for (double t : temperatures) {
      if (!(t > 0) || !std::isfinite(t)) fail("generator.temperatures: must be positive");
    }
    if (!temperatures.empty() && !lstm) fail("generator.temperatures given without generator.lstm");
    if (lstm) {
      try {
        lstm->validate();
      } catch (const ArgumentError& e) {
        fail(std::string("generator.lstm: ") + e.what());
      }
      if (seed_length < 1) fail("generator.seed_length must be at least 1");
    }
    if (samples < 1) fail("generator.samples must be at least 1");
    if (sample_length < 1) fail("generator.sample_length must be at least 1");
    std::set<std::string> seen;
    for (const auto& a : analyses) {
      if (std::find(analysis_names().begin(), analysis_names().end(), a) ==
          analysis_names().end()) {
        std::string all;
        for (const auto& n : analysis_names()) all += (all.empty() ? "" : ", ") + n;
        fail("analysis.run: unknown analysis '" + a + "' (known: " + all + ")");
      }
      if (!seen.insert(a).second) fail("analysis.run: '" + a + "' listed twice");
    }
    auto window = [&](const FitWindow& w, const char* name) {
      if (!(w.lo > 0 && w.lo < w.hi && std::isfinite(w.hi))) {
        fail(std::string("analysis.") + name + ": need 0 < lo < hi");
      }
    };
    window(zipf_window, "zipf_window");
    window(dfa_window, "dfa_window");
    if (!(heaps_fit_start >= 1)) fail("analysis.heaps_fit_start must be at least 1");
    if (dfa_min_scale <= dfa_order + 1) {
      fail("analysis.dfa_scales.min must exceed detrend order + 1");
    }
    if (dfa_max_scale != 0 && dfa_max_scale < dfa_min_scale) {
      fail("analysis.dfa_scales.max is below min");
    }
    if (dfa_scale_count < 2) fail("analysis.dfa_scales.count must be at least 2");
    if (dfa_order < 1) fail("analysis.dfa_order must be at least 1");
    for (auto n : attribution_ngrams) {
      if (n < 1) fail("analysis.attribution_ngrams: sizes must be at least 1");
    }
    if (wants("attribution") && reference.empty()) {
      fail("analysis.run has attribution but no reference corpus is configured");
    }
    if (output_dir.empty()) fail("output_dir must not be empty");
  }
};

namespace detail {

// Reads keys out of one JSON object and rejects any it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key) || j_[key].is_null()) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!non_negative_integer(j_[key])) {
        throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      for (const auto& e : j_[key]) {
        if (!non_negative_integer(e)) {
          throw ConfigError(where_ + "." + key + ": expected non-negative integers");
        }
      }
    }
    try {
      out = j_[key].template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }

  const json& at(const char* key) const { return j_[key]; }
  std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

inline FitWindow read_window(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<std::string> resolve_paths(std::vector<std::string> paths,
                                              const std::filesystem::path& base) {
  for (auto& p : paths) {
    std::filesystem::path q(p);
    if (q.is_relative()) p = (base / q).lexically_normal().string();
  }
  return paths;
}

}  // namespace detail

// Relative corpus paths are taken relative to base_dir.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  detail::ObjectReader top(j, "config");

  if (!top.has("corpus")) throw ConfigError("config.corpus: required");
  {
    detail::ObjectReader r(top.at("corpus"), "corpus");
    r.get("paths", c.corpus);
    r.get("reference_paths", c.reference);
    if (r.has("normalization")) {
      detail::ObjectReader n(r.at("normalization"), "corpus.normalization");
      n.get("lowercase", c.normalization.lowercase);
      n.get("collapse_blank_lines", c.normalization.collapse_blank_lines);
      n.finish();
    }
    r.finish();
  }

  if (top.has("generator")) {
    detail::ObjectReader r(top.at("generator"), "generator");
    r.get("markov_orders", c.markov_orders);
    r.get("temperatures", c.temperatures);
    r.get("samples", c.samples);
    r.get("sample_length", c.sample_length);
    r.get("seed_length", c.seed_length);
    if (r.has("lstm")) {
      TrainConfig t;
      detail::ObjectReader l(r.at("lstm"), "generator.lstm");
      l.get("layers", t.layers);
      l.get("hidden_size", t.hidden_size);
      l.get("window", t.window);
      l.get("bptt_steps", t.bptt_steps);
      l.get("dropout_keep", t.dropout_keep);
      l.get("learning_rate", t.learning_rate);
      l.get("epochs", t.epochs);
      l.get("seed", t.seed);
      l.get("validation_fraction", t.validation_fraction);
      l.get("batch_size", t.batch_size);
      l.get("grad_clip", t.grad_clip);
      l.get("carry_state", t.carry_state);
      l.finish();
      c.lstm = t;
    }
    r.finish();
  }

  if (top.has("analysis")) {
    detail::ObjectReader r(top.at("analysis"), "analysis");
    r.get("run", c.analyses);
    if (r.has("zipf_window")) c.zipf_window = detail::read_window(r.at("zipf_window"), r.path("zipf_window"));
    r.get("heaps_fit_start", c.heaps_fit_start);
    if (r.has("dfa_window")) c.dfa_window = detail::read_window(r.at("dfa_window"), r.path("dfa_window"));
    if (r.has("dfa_mapping")) {
      std::string m;
      r.get("dfa_mapping", m);
      try {
        c.dfa_mapping = parse_mapping(m);
      } catch (const ArgumentError& e) {
        throw ConfigError(std::string("analysis.dfa_mapping: ") + e.what());
      }
    }
    if (r.has("dfa_scales")) {
      detail::ObjectReader s(r.at("dfa_scales"), "analysis.dfa_scales");
      s.get("min", c.dfa_min_scale);
      s.get("max", c.dfa_max_scale);
      s.get("count", c.dfa_scale_count);
      s.finish();
    }
    r.get("dfa_order", c.dfa_order);
    r.get("entropy_length", c.entropy_length);
    r.get("attribution_ngrams", c.attribution_ngrams);
    r.finish();
  }

  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.finish();

  c.corpus = detail::resolve_paths(std::move(c.corpus), base_dir);
  c.reference = detail::resolve_paths(std::move(c.reference), base_dir);
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

// Every field, defaults included.
inline json to_json(const RunConfig& c) {
  json lstm = nullptr;
  if (c.lstm) {
    const auto& t = *c.lstm;
    lstm = {{"layers", t.layers},
            {"hidden_size", t.hidden_size},
            {"window", t.window},
            {"bptt_steps", t.bptt_steps},
            {"dropout_keep", t.dropout_keep},
            {"learning_rate", t.learning_rate},
            {"epochs", t.epochs},
            {"seed", t.seed},
            {"validation_fraction", t.validation_fraction},
            {"batch_size", t.batch_size},
            {"grad_clip", t.grad_clip},
            {"carry_state", t.carry_state}};
  }
  return {
      {"corpus",
       {{"paths", c.corpus},
        {"reference_paths", c.reference},
        {"normalization",
         {{"lowercase", c.normalization.lowercase},
          {"collapse_blank_lines", c.normalization.collapse_blank_lines}}}}},
      {"generator",
       {{"markov_orders", c.markov_orders},
        {"lstm", lstm},
        {"temperatures", c.temperatures},
        {"samples", c.samples},
        {"sample_length", c.sample_length},
        {"seed_length", c.seed_length}}},
      {"analysis",
       {{"run", c.analyses},
        {"zipf_window", {c.zipf_window.lo, c.zipf_window.hi}},
        {"heaps_fit_start", c.heaps_fit_start},
        {"dfa_window", {c.dfa_window.lo, c.dfa_window.hi}},
        {"dfa_mapping", std::string(mapping_name(c.dfa_mapping))},
        {"dfa_scales",
         {{"min", c.dfa_min_scale}, {"max", c.dfa_max_scale}, {"count", c.dfa_scale_count}}},
        {"dfa_order", c.dfa_order},
        {"entropy_length", c.entropy_length},
        {"attribution_ngrams", c.attribution_ngrams}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
  };
}

}  // namespace lingstat
