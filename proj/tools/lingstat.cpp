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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lingstat/config.hpp"
#include "lingstat/creativity.hpp"
#include "lingstat/csv.hpp"
#include "lingstat/dfa.hpp"
#include "lingstat/infotheory.hpp"
#include "lingstat/lstm.hpp"
#include "lingstat/markov.hpp"
#include "lingstat/pipeline.hpp"
#include "lingstat/wordstats.hpp"

namespace fs = std::filesystem;
using namespace lingstat;

namespace {

constexpr int kConfigError = 2;
constexpr int kStageFailure = 3;

const std::vector<std::string> kAnalyses{"zipf",       "heaps",      "dfa", "entropy",
                                         "divergence", "perplexity", "lcs", "attribute"};

void emit(const std::string& bytes, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << bytes;
    return;
  }
  write_file_atomic(out, bytes);
}

void note(const std::string& m) { std::cerr << m << '\n'; }

Corpus load(const std::vector<std::string>& paths, bool lowercase) {
  NormalizationConfig n;
  n.lowercase = lowercase;
  return ingest(std::span<const std::string>(paths), n);
}

std::string fit_line(const char* what, const PowerLawFit& f) {
  return std::string(what) + " exponent " + format_number(f.exponent) + " stderr " +
         format_number(f.std_error) + " r2 " + format_number(f.r_squared) + " window [" +
         format_number(f.window.lo) + ", " + format_number(f.window.hi) + "]";
}

std::string model_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string magic(8, '\0');
  in.read(magic.data(), 8);
  return magic;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lingstat: statistical comparison of generated and natural text"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // ingest
  auto* ing = app.add_subcommand("ingest", "Normalize and concatenate text files");
  std::vector<std::string> ing_in;
  std::string ing_out;
  bool ing_lower = false;
  ing->add_option("--input,-i", ing_in, "UTF-8 text files")->required()->check(CLI::ExistingFile);
  ing->add_option("--out,-o", ing_out, "Output file (default stdout)");
  ing->add_flag("--lowercase", ing_lower);

  // train-markov
  auto* tm = app.add_subcommand("train-markov", "Count an order-m character model");
  std::vector<std::string> tm_in;
  std::size_t tm_order = 0;
  std::string tm_out;
  bool tm_lower = false;
  tm->add_option("--input,-i", tm_in)->required()->check(CLI::ExistingFile);
  tm->add_option("--order,-m", tm_order)->required()->check(CLI::PositiveNumber);
  tm->add_option("--out,-o", tm_out)->required();
  tm->add_flag("--lowercase", tm_lower);

  // train-lstm
  auto* tl = app.add_subcommand("train-lstm", "Train a character LSTM");
  std::string tl_config, tl_out;
  std::vector<std::string> tl_in;
  std::optional<std::uint64_t> tl_seed;
  tl->add_option("--config,-c", tl_config, "Run config; uses corpus and generator.lstm")
      ->check(CLI::ExistingFile);
  tl->add_option("--input,-i", tl_in, "Text files (override the config corpus)")
      ->check(CLI::ExistingFile);
  tl->add_option("--out,-o", tl_out)->required();
  tl->add_option("--seed-rng", tl_seed);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample text from a trained model");
  std::string gen_model, gen_out, gen_seed_text;
  std::size_t gen_len = 0;
  double gen_temp = 1.0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--model", gen_model)->required()->check(CLI::ExistingFile);
  gen->add_option("--length,-n", gen_len)->required()->check(CLI::PositiveNumber);
  gen->add_option("--temperature,-t", gen_temp, "LSTM only")->check(CLI::PositiveNumber);
  gen->add_option("--seed-text", gen_seed_text, "LSTM prompt (default: first alphabet character)");
  gen->add_option("--seed-rng", gen_seed);
  gen->add_option("--out,-o", gen_out);

  // analyze
  auto* an = app.add_subcommand("analyze", "Run one analysis");
  an->require_subcommand(1);
  std::vector<std::string> a_in;
  std::string a_out;
  bool a_lower = false;
  auto common = [&](CLI::App* s, bool input = true) {
    if (input) s->add_option("--input,-i", a_in)->required()->check(CLI::ExistingFile);
    s->add_option("--out,-o", a_out, "Output file (default stdout)");
    s->add_flag("--lowercase", a_lower);
  };
  auto* a_zipf = an->add_subcommand("zipf", "Rank-frequency table");
  common(a_zipf);
  auto* a_heaps = an->add_subcommand("heaps", "Vocabulary growth curve");
  common(a_heaps);
  auto* a_dfa = an->add_subcommand("dfa", "Detrended fluctuation curve");
  common(a_dfa);
  std::string dfa_mapping = "space";
  std::size_t dfa_order = 1;
  a_dfa->add_option("--mapping", dfa_mapping, "space, vowel or byte");
  a_dfa->add_option("--order", dfa_order, "Detrending polynomial order");
  auto* a_ent = an->add_subcommand("entropy", "Match-length entropy rate");
  common(a_ent);
  auto* a_div = an->add_subcommand("divergence", "Cross-parsing divergence between two texts");
  common(a_div, false);
  std::vector<std::string> div_a, div_b;
  a_div->add_option("--a", div_a)->required()->check(CLI::ExistingFile);
  a_div->add_option("--b", div_b)->required()->check(CLI::ExistingFile);
  auto* a_ppl = an->add_subcommand("perplexity", "Bigram perplexity");
  common(a_ppl);
  std::vector<std::string> ppl_train;
  a_ppl->add_option("--train", ppl_train, "Training text")->required()->check(CLI::ExistingFile);
  auto* a_lcs = an->add_subcommand("lcs", "Longest common substring");
  common(a_lcs, false);
  std::vector<std::string> lcs_text, lcs_corpus;
  a_lcs->add_option("--text", lcs_text)->required()->check(CLI::ExistingFile);
  a_lcs->add_option("--corpus", lcs_corpus)->required()->check(CLI::ExistingFile);
  auto* a_att = an->add_subcommand("attribute", "Two-author attribution index");
  common(a_att);
  std::vector<std::string> ref_a, ref_b;
  std::vector<std::size_t> att_n{2, 3, 4, 5, 6, 7, 8};
  a_att->add_option("--ref-a", ref_a)->required()->check(CLI::ExistingFile);
  a_att->add_option("--ref-b", ref_b)->required()->check(CLI::ExistingFile);
  a_att->add_option("--ngram,-n", att_n, "n-gram sizes");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run the full experiment from a config");
  std::string pl_config;
  std::optional<std::string> pl_out;
  std::optional<std::uint64_t> pl_seed;
  unsigned pl_threads = default_threads();
  pl->add_option("--config,-c", pl_config)->required();
  pl->add_option("--out,-o", pl_out, "Output directory (overrides the config)");
  pl->add_option("--seed-rng", pl_seed, "Master seed (overrides the config)");
  pl->add_option("--threads,-j", pl_threads)->check(CLI::PositiveNumber);

  // report
  auto* rp = app.add_subcommand("report", "Summarize a pipeline run directory");
  std::string rp_dir;
  rp->add_option("--out,-o,run_dir", rp_dir, "Run directory")->required();

  if (argc >= 3 && std::string(argv[1]) == "analyze" && argv[2][0] != '-' &&
      std::find(kAnalyses.begin(), kAnalyses.end(), argv[2]) == kAnalyses.end()) {
    std::string all;
    for (const auto& a : kAnalyses) all += (all.empty() ? "" : ", ") + a;
    std::cerr << "unknown analysis '" << argv[2] << "'; available: " << all << '\n';
    return kConfigError;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*ing) {
      const auto c = load(ing_in, ing_lower);
      emit(c.utf8(), ing_out);
      note("characters " + std::to_string(c.size()) + ", alphabet " +
           std::to_string(c.alphabet_size()) + ", sha256 " + sha256(c.utf8()));
    } else if (*tm) {
      const auto c = load(tm_in, tm_lower);
      const auto model = train_markov(c, tm_order);
      model.save(tm_out);
      note("order " + std::to_string(tm_order) + ", contexts " +
           std::to_string(model.context_count()));
    } else if (*tl) {
      RunConfig rc;
      if (!tl_config.empty()) rc = load_config(tl_config);
      TrainConfig t = rc.lstm.value_or(TrainConfig{});
      if (tl_seed) t.seed = *tl_seed;
      try {
        t.validate();
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
      }
      const auto& paths = tl_in.empty() ? rc.corpus : tl_in;
      if (paths.empty()) throw ConfigError("train-lstm needs --input or a config with a corpus");
      const auto c = ingest(std::span<const std::string>(paths), rc.normalization);
      TrainHooks hooks;
      hooks.progress = [](const EpochReport& r) {
        note("epoch " + std::to_string(r.epoch) + " train " + format_number(r.train_loss) +
             " validation " + format_number(r.validation_loss));
      };
      train_bptt(c, t, hooks).model.save(tl_out);
    } else if (*gen) {
      const auto magic = model_magic(gen_model);
      if (magic == "LGSTMKV\n") {
        const auto model = MarkovModel::load(gen_model);
        emit(generate_markov(model, gen_len, gen_seed).utf8(), gen_out);
      } else if (magic == LstmModel::kMagic) {
        const auto model = LstmModel::load(gen_model);
        std::u32string prompt = gen_seed_text.empty()
                                    ? std::u32string(1, model.alphabet().front())
                                    : utf8::decode(gen_seed_text).text;
        emit(utf8::encode(sample_text(model, prompt, gen_len, gen_temp, gen_seed)), gen_out);
      } else {
        throw FormatError("'" + gen_model + "' is not a lingstat model");
      }
    } else if (*an) {
      if (*a_zipf) {
        const auto table = rank_frequency(tokenize_words(load(a_in, a_lower)));
        CsvWriter w{"rank", "frequency"};
        for (const auto& e : table.entries) w.row(e.rank, e.frequency);
        emit(w.str(), a_out);
        try {
          note(fit_line("zipf", zipf_exponent(table)));
        } catch (const FitError& e) {
          note(std::string("zipf fit skipped: ") + e.what());
        }
      } else if (*a_heaps) {
        const auto curve = vocabulary_growth(tokenize_words(load(a_in, a_lower)));
        CsvWriter w{"t", "V"};
        for (const auto& p : curve.points) w.row(p.t, p.v);
        emit(w.str(), a_out);
        try {
          note(fit_line("heaps", heaps_exponent(curve)));
        } catch (const FitError& e) {
          note(std::string("heaps fit skipped: ") + e.what());
        }
      } else if (*a_dfa) {
        Mapping m;
        try {
          m = parse_mapping(dfa_mapping);
        } catch (const ArgumentError& e) {
          throw ConfigError(e.what());
        }
        const auto curve = dfa_curve(map_text(load(a_in, a_lower), m), dfa_order);
        CsvWriter w{"L", "F", "F_normalised"};
        for (const auto& p : curve.points) w.row(p.scale, p.fluctuation, p.normalised);
        emit(w.str(), a_out);
        try {
          note(fit_line("dfa", dfa_alpha(curve)));
        } catch (const FitError& e) {
          note(std::string("dfa fit skipped: ") + e.what());
        }
      } else if (*a_ent) {
        const auto e = entropy_rate(load(a_in, a_lower));
        CsvWriter w{"bits_per_char", "method", "sample_length"};
        w.row(e.bits_per_char, e.method, e.sample_length);
        emit(w.str(), a_out);
        if (e.short_sample) note("note: sample shorter than the recommended 100000 characters");
      } else if (*a_div) {
        const auto r = cross_divergence(load(div_a, a_lower), load(div_b, a_lower));
        CsvWriter w{"kl_ab", "kl_ba", "symmetrized"};
        w.row(r.kl_ab, r.kl_ba, r.symmetrized);
        emit(w.str(), a_out);
      } else if (*a_ppl) {
        const auto lm = train_bigram(tokenize_words(load(ppl_train, a_lower)));
        CsvWriter w{"perplexity"};
        w.row(perplexity(lm, tokenize_words(load(a_in, a_lower))));
        emit(w.str(), a_out);
      } else if (*a_lcs) {
        const auto r = longest_common_substring(load(lcs_text, a_lower), load(lcs_corpus, a_lower));
        CsvWriter w{"length", "text_offset", "corpus_offset"};
        w.row(r.length, r.text_offset, r.corpus_offset);
        emit(w.str(), a_out);
      } else if (*a_att) {
        const auto x = load(a_in, a_lower);
        const SuffixIndex ia(load(ref_a, a_lower)), ib(load(ref_b, a_lower));
        CsvWriter w{"n", "index"};
        for (auto n : att_n) w.row(n, attribution_index(x, ia, ib, n));
        emit(w.str(), a_out);
      }
    } else if (*pl) {
      auto config = load_config(pl_config);
      if (pl_seed) config.seed = *pl_seed;
      const auto out = resolve_output_dir(config.output_dir, pl_out, std::getenv("LINGSTAT_OUT_ROOT"));
      PipelineOptions opt{out, pl_threads, note};
      const auto r = run_pipeline(config, opt);
      if (!r.ok) {
        note("stage " + r.failed_stage + " failed: " + r.error);
        return kStageFailure;
      }
      note("wrote " + out.string());
    } else if (*rp) {
      const fs::path dir = rp_dir;
      std::ifstream in(dir / "manifest.json");
      if (!in) throw ConfigError("no manifest.json in '" + rp_dir + "'");
      const auto m = json::parse(in);
      std::cout << "run " << m["run_id"].get<std::string>() << "  lingstat "
                << m["version"].get<std::string>() << "  status "
                << m["status"].get<std::string>() << '\n';
      if (!m["failed_stage"].is_null()) {
        std::cout << "failed stage " << m["failed_stage"].get<std::string>() << ": "
                  << m["error"].get<std::string>() << '\n';
      }
      for (const auto& s : m["stages"]) {
        std::printf("  %-22s %9.3f s  cache %zu/%zu\n", s["name"].get<std::string>().c_str(),
                    s["seconds"].get<double>(), s["cache_hits"].get<std::size_t>(),
                    s["cache_hits"].get<std::size_t>() + s["cache_misses"].get<std::size_t>());
      }
      for (const auto& w : m["warnings"]) std::cout << "warning: " << w.get<std::string>() << '\n';
      std::ifstream ex(dir / "exponents.csv");
      if (ex) std::cout << '\n' << ex.rdbuf();
    }
  } catch (const ConfigError& e) {
    note(std::string("config error: ") + e.what());
    return kConfigError;
  } catch (const ArgumentError& e) {
    note(std::string("error: ") + e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    note(std::string("error: ") + e.what());
    return kStageFailure;
  }
  return 0;
}
