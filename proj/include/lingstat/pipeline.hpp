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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lingstat/config.hpp"
#include "lingstat/corpus.hpp"
#include "lingstat/creativity.hpp"
#include "lingstat/csv.hpp"
#include "lingstat/dfa.hpp"
#include "lingstat/error.hpp"
#include "lingstat/hash.hpp"
#include "lingstat/infotheory.hpp"
#include "lingstat/lstm.hpp"
#include "lingstat/markov.hpp"
#include "lingstat/random.hpp"
#include "lingstat/suffix_automaton.hpp"
#include "lingstat/wordstats.hpp"

namespace lingstat {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Column layout of every table the pipeline writes.
inline const std::map<std::string, std::vector<std::string>>& table_schemas() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"zipf.csv", {"setting", "rank", "frequency"}},
      {"heaps.csv", {"setting", "t", "V"}},
      {"dfa.csv", {"setting", "L", "F", "F_normalised"}},
      {"exponents.csv", {"quantity", "setting", "exponent", "stderr", "window_lo", "window_hi"}},
      {"entropy.csv", {"setting", "bits_per_char"}},
      {"divergence.csv", {"setting", "kl_ab", "kl_ba", "symmetrized"}},
      {"perplexity.csv", {"setting", "perplexity"}},
      {"lcs.csv", {"setting", "length", "text_offset"}},
      {"attribution.csv", {"n", "setting", "index", "samples"}},
  };
  return s;
}

// Runs fn(0..count-1) on up to `threads` workers. Any exception is
// rethrown after all workers stop; the lowest failing index wins, so the
// outcome matches a serial run.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(threads, count);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Writes through a temporary so an interrupted run never leaves a torn file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  return read_document(path.string()).bytes;
}

// --out beats the config; a relative result is placed under the output
// root from the environment when one is given.
inline std::filesystem::path resolve_output_dir(const std::string& configured,
                                                const std::optional<std::string>& cli_override,
                                                const char* env_root) {
  std::filesystem::path p = cli_override ? *cli_override : configured;
  if (p.is_relative() && env_root && *env_root) p = std::filesystem::path(env_root) / p;
  return p;
}

struct PipelineOptions {
  std::filesystem::path out_dir;
  unsigned threads = 1;
  std::function<void(const std::string&)> log;
};

struct PipelineResult {
  bool ok = false;
  std::string failed_stage;
  std::string error;
  std::filesystem::path manifest;
};

struct GeneratorSetting {
  std::string name;
  std::optional<std::size_t> order;   // Markov
  std::optional<double> temperature;  // LSTM
};

inline std::vector<GeneratorSetting> generator_settings(const RunConfig& c) {
  std::vector<GeneratorSetting> out;
  for (auto m : c.markov_orders) out.push_back({"markov-" + std::to_string(m), m, {}});
  for (double t : c.temperatures) out.push_back({"lstm-" + format_number(t), {}, t});
  return out;
}

namespace detail {

inline constexpr std::uint64_t kShuffleStream = 0;
inline constexpr std::uint64_t kSampleStream = 1;

struct Text {
  std::string setting;
  std::size_t sample = 0;
  Corpus corpus;
};

struct StageLog {
  std::string name;
  double seconds = 0;
  json inputs = json::object();
  json outputs = json::object();
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
};

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

// Standard error of the mean; nan below two values.
inline double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

class Pipeline {
 public:
  Pipeline(const RunConfig& config, const PipelineOptions& opt)
      : c_(config), opt_(opt), out_(opt.out_dir), cache_(opt.out_dir / "cache") {}

  PipelineResult run() {
    PipelineResult result;
    result.manifest = out_ / "manifest.json";
    std::filesystem::create_directories(cache_);
    std::string stage = "ingest";
    try {
      timed("ingest", [&](StageLog& s) { ingest(s); });
      stage = "train";
      timed("train", [&](StageLog& s) { train(s); });
      stage = "generate";
      timed("generate", [&](StageLog& s) { generate(s); });
      for (const auto& a : c_.analyses) {
        stage = "analyze:" + a;
        timed(stage, [&](StageLog& s) { analyze(a, s); });
      }
      if (!exponents_.empty()) {
        stage = "analyze:exponents";
        timed(stage, [&](StageLog& s) { write_exponents(s); });
      }
      result.ok = true;
    } catch (const std::exception& e) {
      result.failed_stage = stage;
      result.error = e.what();
    }
    write_manifest(result);
    return result;
  }

 private:
  void log(const std::string& m) {
    if (opt_.log) opt_.log(m);
  }

  template <typename F>
  void timed(const std::string& name, F&& body) {
    log("stage " + name);
    stages_.push_back({name});
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      stages_.back().seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    try {
      body(stages_.back());
    } catch (...) {
      finish();
      throw;
    }
    finish();
  }

  // Stage 1: read and normalize the corpus files.
  void ingest(StageLog& s) {
    Sha256 key;
    key.field("corpus/1");
    key.field(c_.normalization.lowercase ? "lower" : "keep-case");
    key.field(c_.normalization.collapse_blank_lines ? "collapse" : "keep-blank");
    for (const auto& p : expand_paths(c_.corpus)) {
      const auto h = sha256_file(p);
      s.inputs[p] = h;
      key.field(h);
    }
    corpus_key_ = key.hex();
    source_ = ingest_paths(c_.corpus);
    if (!c_.reference.empty()) {
      for (const auto& p : expand_paths(c_.reference)) s.inputs[p] = sha256_file(p);
      reference_ = ingest_paths(c_.reference);
    }
    const auto text = source_.utf8();
    write_file_atomic(out_ / "corpus.txt", text);
    s.outputs["corpus.txt"] = sha256(text);
    log("corpus: " + std::to_string(source_.size()) + " characters, alphabet " +
        std::to_string(source_.alphabet_size()));
  }

  Corpus ingest_paths(const std::vector<std::string>& paths) {
    return lingstat::ingest(std::span<const std::string>(paths), c_.normalization);
  }

  // Stage 2: one model per Markov order and at most one LSTM.
  void train(StageLog& s) {
    std::vector<std::string> keys(c_.markov_orders.size());
    std::vector<char> hit(keys.size());
    parallel_for(keys.size(), opt_.threads, [&](std::size_t i) {
      const auto m = c_.markov_orders[i];
      keys[i] = Sha256().field("markov/1").field(corpus_key_).field(std::to_string(m)).hex();
      const auto path = cache_ / ("markov-" + keys[i] + ".mkv");
      hit[i] = std::filesystem::exists(path);
      if (hit[i]) return;
      std::ostringstream buf;
      train_markov(source_, m).save(buf);
      write_file_atomic(path, buf.str());
    });
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto file = "markov-" + keys[i] + ".mkv";
      s.outputs["cache/" + file] = sha256_file((cache_ / file).string());
      markov_keys_[c_.markov_orders[i]] = keys[i];
      hit[i] ? ++s.cache_hits : ++s.cache_misses;
    }
    if (c_.lstm) {
      lstm_key_ = Sha256()
                      .field("lstm/1")
                      .field(corpus_key_)
                      .field(to_json(c_)["generator"]["lstm"].dump())
                      .hex();
      const auto file = "lstm-" + lstm_key_ + ".lstm";
      const auto path = cache_ / file;
      if (std::filesystem::exists(path)) {
        ++s.cache_hits;
      } else {
        ++s.cache_misses;
        TrainHooks hooks;
        hooks.progress = [&](const EpochReport& r) {
          log("lstm epoch " + std::to_string(r.epoch) + " train " +
              format_number(r.train_loss) + " validation " + format_number(r.validation_loss));
        };
        auto trained = train_bptt(source_, *c_.lstm, hooks);
        std::ostringstream buf(std::ios::binary);
        trained.model.save(buf);
        write_file_atomic(path, buf.str());
      }
      s.outputs["cache/" + file] = sha256_file(path.string());
    }
  }

  // Stage 3: samples for every (setting, sample index).
  void generate(StageLog& s) {
    settings_ = generator_settings(c_);
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t i = 0; i < settings_.size(); ++i) {
      for (std::size_t k = 0; k < c_.samples; ++k) jobs.emplace_back(i, k);
    }
    std::map<std::size_t, MarkovModel> markov;
    for (const auto& st : settings_) {
      if (st.order && !markov.count(*st.order)) {
        markov.emplace(*st.order,
                       MarkovModel::load((cache_ / ("markov-" + markov_keys_.at(*st.order) +
                                                    ".mkv")).string()));
      }
    }
    std::optional<LstmModel> lstm;
    if (!c_.temperatures.empty()) {
      lstm = LstmModel::load((cache_ / ("lstm-" + lstm_key_ + ".lstm")).string());
      if (source_.size() < c_.seed_length) {
        throw ArgumentError("corpus is shorter than generator.seed_length");
      }
    }

    std::vector<std::string> keys(jobs.size());
    std::vector<char> hit(jobs.size());
    std::vector<std::string> texts(jobs.size());
    parallel_for(jobs.size(), opt_.threads, [&](std::size_t j) {
      const auto& st = settings_[jobs[j].first];
      const std::size_t k = jobs[j].second;
      const auto seed = derive_seed(c_.seed, {kSampleStream, jobs[j].first, k});
      const auto& model_key = st.order ? markov_keys_.at(*st.order) : lstm_key_;
      keys[j] = Sha256()
                    .field("sample/1")
                    .field(model_key)
                    .field(st.name)
                    .field(std::to_string(seed))
                    .field(std::to_string(c_.sample_length))
                    .field(std::to_string(c_.seed_length))
                    .hex();
      const auto path = cache_ / ("sample-" + keys[j] + ".txt");
      hit[j] = std::filesystem::exists(path);
      if (hit[j]) {
        texts[j] = read_file_bytes(path);
        return;
      }
      if (st.order) {
        texts[j] = generate_markov(markov.at(*st.order), source_, c_.sample_length,
                                   std::nullopt, seed)
                       .utf8();
      } else {
        Rng rng(seed);
        const auto pos = rng.below(source_.size() - c_.seed_length + 1);
        const auto prompt = source_.text(pos, c_.seed_length);
        texts[j] = utf8::encode(
            sample_text(*lstm, prompt, c_.sample_length, *st.temperature, mix64(seed)));
      }
      write_file_atomic(path, texts[j]);
    });

    texts_.push_back({"source", 0, source_});
    texts_.push_back(
        {"shuffled", 0, shuffle_chars(source_, derive_seed(c_.seed, {kShuffleStream}))});
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& st = settings_[jobs[j].first];
      const auto file = "sample-" + keys[j] + ".txt";
      s.outputs[st.name + "/" + std::to_string(jobs[j].second)] = {
          {"file", "cache/" + file}, {"sha256", sha256(texts[j])}};
      hit[j] ? ++s.cache_hits : ++s.cache_misses;
      texts_.push_back({st.name, jobs[j].second, Corpus::from_utf8(texts[j])});
    }
  }

  // Indices into texts_ for a group of settings.
  std::vector<std::size_t> select(bool with_source, bool with_shuffled) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < texts_.size(); ++i) {
      if (texts_[i].setting == "source" && !with_source) continue;
      if (texts_[i].setting == "shuffled" && !with_shuffled) continue;
      out.push_back(i);
    }
    return out;
  }

  // Settings in first-appearance order with the texts behind each.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> group(
      const std::vector<std::size_t>& idx) const {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    for (auto i : idx) {
      if (out.empty() || out.back().first != texts_[i].setting) out.push_back({texts_[i].setting, {}});
      out.back().second.push_back(i);
    }
    return out;
  }

  // Runs f on every selected text. Estimators that reject a too-short or
  // degenerate text yield nan and a warning instead of stopping the run.
  std::vector<double> per_text(const std::vector<std::size_t>& idx, const std::string& what,
                               const std::function<double(const Text&, std::size_t)>& f) {
    std::vector<double> out(idx.size(), std::nan(""));
    std::vector<std::string> warn(idx.size());
    parallel_for(idx.size(), opt_.threads, [&](std::size_t i) {
      try {
        out[i] = f(texts_[idx[i]], i);
      } catch (const FitError& e) {
        warn[i] = e.what();
      } catch (const ArgumentError& e) {
        warn[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (!warn[i].empty()) {
        add_warning(what + " [" + texts_[idx[i]].setting + "/" +
                    std::to_string(texts_[idx[i]].sample) + "]: " + warn[i]);
      }
    }
    return out;
  }

  void add_warning(const std::string& w) {
    log("warning: " + w);
    warnings_.push_back(w);
  }

  void write_table(StageLog& s, const std::string& name, const CsvWriter& w) {
    write_file_atomic(out_ / name, w.str());
    s.outputs[name] = sha256(w.str());
  }

  void add_exponents(const std::string& quantity, const std::vector<std::size_t>& idx,
                     const std::vector<double>& exps, const std::vector<double>& errs,
                     FitWindow window, const std::vector<double>& window_hi = {}) {
    std::map<std::size_t, std::size_t> pos;
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
    for (const auto& [setting, members] : group(idx)) {
      std::vector<double> e, hi;
      for (auto m : members) {
        e.push_back(exps[pos[m]]);
        if (!window_hi.empty()) hi.push_back(window_hi[pos[m]]);
      }
      const double err = members.size() >= 2 ? std_error(e) : errs[pos[members.front()]];
      exponents_.push_back({quantity, setting, mean(e), err, window.lo,
                            hi.empty() ? window.hi : mean(hi)});
    }
  }

  const SuffixIndex& source_index() {
    if (!source_index_) source_index_.emplace(source_);
    return *source_index_;
  }

  Corpus entropy_view(const Corpus& c) const {
    return c_.entropy_length && c.size() > c_.entropy_length ? c.slice(0, c_.entropy_length) : c;
  }

  // Stage 4: one analysis, one table.
  void analyze(const std::string& a, StageLog& s) {
    if (a == "zipf") return zipf(s);
    if (a == "heaps") return heaps(s);
    if (a == "dfa") return dfa(s);
    if (a == "entropy") return entropy(s);
    if (a == "divergence") return divergence(s);
    if (a == "perplexity") return perplexity_table(s);
    if (a == "lcs") return lcs(s);
    if (a == "attribution") return attribution(s);
    throw ConfigError("unknown analysis '" + a + "'");
  }

  void zipf(StageLog& s) {
    const auto idx = select(true, false);
    std::vector<RankFrequencyTable> tables(idx.size());
    std::vector<double> err(idx.size(), std::nan(""));
    const auto exps = per_text(idx, "zipf", [&](const Text& t, std::size_t k) {
      tables[k] = rank_frequency(tokenize_words(t.corpus));
      const auto fit = zipf_exponent(tables[k], c_.zipf_window);
      err[k] = fit.std_error;
      return fit.exponent;
    });
    CsvWriter w{"setting", "rank", "frequency"};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (texts_[idx[i]].sample != 0) continue;
      for (const auto& e : tables[i].entries) w.row(texts_[idx[i]].setting, e.rank, e.frequency);
    }
    write_table(s, "zipf.csv", w);
    add_exponents("zipf", idx, exps, err, c_.zipf_window);
  }

  void heaps(StageLog& s) {
    const auto idx = select(true, false);
    std::vector<VocabularyGrowthCurve> curves(idx.size());
    std::vector<double> err(idx.size(), std::nan("")), hi(idx.size(), std::nan(""));
    const auto exps = per_text(idx, "heaps", [&](const Text& t, std::size_t k) {
      curves[k] = vocabulary_growth(tokenize_words(t.corpus));
      const auto fit = heaps_exponent(curves[k], c_.heaps_fit_start);
      err[k] = fit.std_error;
      hi[k] = fit.window.hi;
      return fit.exponent;
    });
    CsvWriter w{"setting", "t", "V"};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (texts_[idx[i]].sample != 0) continue;
      for (const auto& p : curves[i].points) w.row(texts_[idx[i]].setting, p.t, p.v);
    }
    write_table(s, "heaps.csv", w);
    add_exponents("heaps", idx, exps, err, {c_.heaps_fit_start, 0}, hi);
  }

  void dfa(StageLog& s) {
    const auto idx = select(true, true);
    std::vector<FluctuationCurve> curves(idx.size());
    std::vector<double> err(idx.size(), std::nan(""));
    const auto exps = per_text(idx, "dfa", [&](const Text& t, std::size_t k) {
      const auto series = map_text(t.corpus, c_.dfa_mapping);
      const std::size_t quarter = series.values.size() / 4;
      const std::size_t hi = c_.dfa_max_scale ? std::min(c_.dfa_max_scale, quarter) : quarter;
      if (hi < c_.dfa_min_scale) {
        throw ArgumentError("text of length " + std::to_string(series.values.size()) +
                            " is too short for the configured DFA scales");
      }
      const auto scales = geometric_scales(c_.dfa_min_scale, hi, c_.dfa_scale_count);
      curves[k] = dfa_curve(series, scales, c_.dfa_order);
      const auto fit = dfa_alpha(curves[k], c_.dfa_window);
      if (fit.degenerate) throw FitError("fluctuation is zero, alpha undefined");
      err[k] = fit.std_error;
      return fit.exponent;
    });
    CsvWriter w{"setting", "L", "F", "F_normalised"};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (texts_[idx[i]].sample != 0) continue;
      for (const auto& p : curves[i].points) {
        w.row(texts_[idx[i]].setting, p.scale, p.fluctuation, p.normalised);
      }
    }
    write_table(s, "dfa.csv", w);
    add_exponents("dfa", idx, exps, err, c_.dfa_window);
  }

  void compute_entropies(const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> todo;
    for (auto i : idx) {
      if (!entropy_cache_.count(i)) todo.push_back(i);
    }
    const auto h = per_text(todo, "entropy", [&](const Text& t, std::size_t) {
      return entropy_rate(entropy_view(t.corpus)).bits_per_char;
    });
    for (std::size_t i = 0; i < todo.size(); ++i) entropy_cache_[todo[i]] = h[i];
  }

  void entropy(StageLog& s) {
    const auto idx = select(true, true);
    compute_entropies(idx);
    CsvWriter w{"setting", "bits_per_char"};
    for (const auto& [setting, members] : group(idx)) {
      std::vector<double> h;
      for (auto m : members) h.push_back(entropy_cache_.at(m));
      w.row(setting, mean(h));
    }
    write_table(s, "entropy.csv", w);
  }

  void divergence(StageLog& s) {
    const auto idx = select(false, true);
    std::vector<std::size_t> all = idx;
    all.push_back(0);
    compute_entropies(all);
    const auto src = entropy_view(source_);
    std::vector<double> ab(idx.size(), std::nan("")), ba(idx.size(), std::nan(""));
    std::vector<std::size_t> pos(texts_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
    std::optional<SuffixIndex> src_index;
    try {
      check_estimator_input(src, "source");
      src_index.emplace(src);
    } catch (const ArgumentError& e) {
      add_warning(std::string("divergence: ") + e.what());
    }
    const double h_src = entropy_cache_.at(0);
    if (src_index) per_text(idx, "divergence", [&](const Text& t, std::size_t k) {
      const auto x = entropy_view(t.corpus);
      check_estimator_input(x, "text");
      const double h_x = entropy_cache_.at(idx[k]);
      ab[k] = kl_divergence(x, h_x, *src_index);
      ba[k] = kl_divergence(src, h_src, SuffixIndex(x));
      return 0.0;
    });
    CsvWriter w{"setting", "kl_ab", "kl_ba", "symmetrized"};
    for (const auto& [setting, members] : group(idx)) {
      std::vector<double> a, b;
      for (auto m : members) a.push_back(ab[pos[m]]), b.push_back(ba[pos[m]]);
      w.row(setting, mean(a), mean(b), (mean(a) + mean(b)) / 2);
    }
    write_table(s, "divergence.csv", w);
  }

  void perplexity_table(StageLog& s) {
    const auto idx = select(true, false);
    const auto lm = train_bigram(tokenize_words(source_));
    const auto ppl = per_text(idx, "perplexity", [&](const Text& t, std::size_t) {
      return perplexity(lm, tokenize_words(t.corpus));
    });
    std::vector<std::size_t> pos(texts_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
    CsvWriter w{"setting", "perplexity"};
    for (const auto& [setting, members] : group(idx)) {
      std::vector<double> p;
      for (auto m : members) p.push_back(ppl[pos[m]]);
      w.row(setting, mean(p));
    }
    write_table(s, "perplexity.csv", w);
  }

  void lcs(StageLog& s) {
    const auto idx = select(false, false);
    const auto& index = source_index();
    std::vector<CommonSubstring> found(idx.size());
    std::vector<std::size_t> pos(texts_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
    per_text(idx, "lcs", [&](const Text& t, std::size_t k) {
      found[k] = longest_common_substring(t.corpus, index);
      return 0.0;
    });
    CsvWriter w{"setting", "length", "text_offset"};
    for (const auto& [setting, members] : group(idx)) {
      CommonSubstring best;
      for (auto m : members) {
        if (found[pos[m]].length > best.length) best = found[pos[m]];
      }
      w.row(setting, best.length, best.text_offset);
    }
    write_table(s, "lcs.csv", w);
  }

  void attribution(StageLog& s) {
    const auto idx = select(false, false);
    const auto& ia = source_index();
    const SuffixIndex ib(reference_);
    std::vector<std::size_t> pos(texts_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = i;
    CsvWriter w{"n", "setting", "index", "samples"};
    for (auto n : c_.attribution_ngrams) {
      const auto v = per_text(idx, "attribution n=" + std::to_string(n),
                              [&](const Text& t, std::size_t) {
                                return attribution_index(t.corpus, ia, ib, n);
                              });
      for (const auto& [setting, members] : group(idx)) {
        std::vector<double> x;
        for (auto m : members) x.push_back(v[pos[m]]);
        w.row(n, setting, mean(x), members.size());
      }
    }
    write_table(s, "attribution.csv", w);
  }

  void write_exponents(StageLog& s) {
    CsvWriter w{"quantity", "setting", "exponent", "stderr", "window_lo", "window_hi"};
    for (const auto& e : exponents_) {
      w.row(e.quantity, e.setting, e.exponent, e.std_error, e.window_lo, e.window_hi);
    }
    write_table(s, "exponents.csv", w);
  }

  void write_manifest(const PipelineResult& r) {
    json stages = json::array();
    for (const auto& st : stages_) {
      stages.push_back({{"name", st.name},
                        {"seconds", st.seconds},
                        {"inputs", st.inputs},
                        {"outputs", st.outputs},
                        {"cache_hits", st.cache_hits},
                        {"cache_misses", st.cache_misses}});
    }
    json tables = json::object();
    for (const auto& [name, cols] : table_schemas()) {
      if (std::filesystem::exists(out_ / name)) {
        tables[name] = {{"columns", cols}, {"sha256", sha256_file((out_ / name).string())}};
      }
    }
    const auto snapshot = to_json(c_);
    json m = {
        {"schema_version", kSchemaVersion},
        {"tool", "lingstat"},
        {"version", std::string(kToolVersion)},
        {"run_id", sha256(snapshot.dump()).substr(0, 16)},
        {"config", snapshot},
        {"status", r.ok ? "ok" : "failed"},
        {"failed_stage", r.ok ? json(nullptr) : json(r.failed_stage)},
        {"error", r.ok ? json(nullptr) : json(r.error)},
        {"threads", opt_.threads},
        {"settings", json::array()},
        {"stages", stages},
        {"tables", tables},
        {"warnings", warnings_},
        {"attribution", {{"ngram_unit", "character"}, {"profile", "distinct"},
                         {"index", "(s_a - s_b) / (s_a + s_b)"}}},
    };
    for (const auto& st : settings_) m["settings"].push_back(st.name);
    write_file_atomic(r.manifest, m.dump(2) + "\n");
  }

  struct ExponentRow {
    std::string quantity;
    std::string setting;
    double exponent;
    double std_error;
    double window_lo;
    double window_hi;
  };

  const RunConfig& c_;
  PipelineOptions opt_;
  std::filesystem::path out_;
  std::filesystem::path cache_;
  std::string corpus_key_;
  std::string lstm_key_;
  std::map<std::size_t, std::string> markov_keys_;
  Corpus source_;
  Corpus reference_;
  std::vector<GeneratorSetting> settings_;
  std::vector<Text> texts_;
  std::optional<SuffixIndex> source_index_;
  std::map<std::size_t, double> entropy_cache_;
  std::vector<ExponentRow> exponents_;
  std::vector<std::string> warnings_;
  std::vector<StageLog> stages_;
};

}  // namespace detail

// ingest -> train -> generate -> analyses. Models and samples are cached
// under out/cache keyed by a hash of everything that determines them, so
// a rerun only recomputes what changed. manifest.json is written once at
// the end, also when a stage fails.
inline PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  config.validate();
  return detail::Pipeline(config, options).run();
}

}  // namespace lingstat
