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
#include <sstream>

#include "lingstat/lstm.hpp"
#include "synthetic.hpp"

namespace lingstat {
namespace {

double logistic(double x) { return 1 / (1 + std::exp(-x)); }

// Straight-line evaluation of the four gate equations, one unit at a time.
std::pair<VectorXd, VectorXd> naive_step(const LstmLayer& layer, const VectorXd& x,
                                         const VectorXd& h, const VectorXd& c) {
  const GateParams f = layer.gate(Gate::forget), i = layer.gate(Gate::input),
                   o = layer.gate(Gate::output), g = layer.gate(Gate::candidate);
  const auto n = h.size();
  VectorXd h_out(n), c_out(n);
  auto affine = [&](const GateParams& p, Eigen::Index k) {
    double z = p.b[k];
    for (Eigen::Index j = 0; j < x.size(); ++j) z += p.W(k, j) * x[j];
    for (Eigen::Index j = 0; j < n; ++j) z += p.U(k, j) * h[j];
    return z;
  };
  for (Eigen::Index k = 0; k < n; ++k) {
    const double fk = logistic(affine(f, k));
    const double ik = logistic(affine(i, k));
    const double ok = logistic(affine(o, k));
    const double gk = std::tanh(affine(g, k));
    c_out[k] = fk * c[k] + ik * gk;
    h_out[k] = ok * std::tanh(c_out[k]);
  }
  return {h_out, c_out};
}

LstmLayer random_layer(std::size_t in, std::size_t hidden, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  LstmLayer l(in, hidden);
  for (auto* m : {&l.W, &l.U}) {
    for (Eigen::Index j = 0; j < m->size(); ++j) m->data()[j] = rng.uniform(-scale, scale);
  }
  for (auto& v : l.b) v = rng.uniform(-scale, scale);
  return l;
}

VectorXd random_vector(Eigen::Index n, Rng& rng, double scale = 1) {
  VectorXd v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

TrainConfig tiny_config(std::size_t layers, std::size_t hidden, double keep = 1.0) {
  TrainConfig c;
  c.layers = layers;
  c.hidden_size = hidden;
  c.window = c.bptt_steps = 5;
  c.dropout_keep = keep;
  c.seed = 3;
  return c;
}

TEST(LstmStep, ZeroParameters) {
  LstmLayer l(3, 4);
  VectorXd x = VectorXd::Constant(3, 0.7);
  auto [h, c] = lstm_step(l, x, VectorXd::Zero(4), VectorXd::Zero(4));
  EXPECT_EQ(h, VectorXd::Zero(4));
  EXPECT_EQ(c, VectorXd::Zero(4));
  VectorXd c0(4);
  c0 << 1, -2, 0.5, 3;
  auto [h2, c2] = lstm_step(l, x, VectorXd::Zero(4), c0);
  for (int k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(c2[k], 0.5 * c0[k]);
    EXPECT_DOUBLE_EQ(h2[k], 0.5 * std::tanh(0.5 * c0[k]));
  }
}

TEST(LstmStep, MatchesNaiveEvaluator) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto layer = random_layer(5, 6, 100 + trial);
    VectorXd x = random_vector(5, rng), h = random_vector(6, rng), c = random_vector(6, rng, 2);
    auto [h1, c1] = lstm_step(layer, x, h, c);
    auto [h2, c2] = naive_step(layer, x, h, c);
    EXPECT_LT((h1 - h2).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((c1 - c2).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LstmStep, MaskTouchesInputOnly) {
  Rng rng(8);
  auto layer = random_layer(4, 3, 9);
  VectorXd x = random_vector(4, rng), h = random_vector(3, rng), c = random_vector(3, rng);
  VectorXd mask(4);
  mask << 0, 2, 2, 0;
  auto [h1, c1] = lstm_step(layer, x, h, c, &mask);
  auto [h2, c2] = naive_step(layer, x.cwiseProduct(mask), h, c);
  EXPECT_LT((h1 - h2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((c1 - c2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(lstm_step(layer, VectorXd::Zero(3), h, c), ArgumentError);
}

TEST(LstmStep, GatesAndOutputBounded) {
  Rng rng(9);
  auto layer = random_layer(8, 8, 10, 3.0);
  VectorXd h = VectorXd::Zero(8), c = VectorXd::Zero(8);
  for (int t = 0; t < 200; ++t) {
    std::tie(h, c) = lstm_step(layer, random_vector(8, rng, 5), h, c);
    EXPECT_LT(h.cwiseAbs().maxCoeff(), 1.0);
  }
  for (Gate g : {Gate::forget, Gate::input, Gate::output}) {
    auto p = layer.gate(g);
    VectorXd z = p.W * random_vector(8, rng, 5) + p.U * h + p.b;
    for (auto v : z) {
      EXPECT_GT(logistic(v), 0.0);
      EXPECT_LT(logistic(v), 1.0);
    }
  }
}

TEST(Softmax, HandCases) {
  VectorXd y(2);
  y << 0, 0;
  auto p = softmax_temperature(y, 1);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  y << 1, 0;
  p = softmax_temperature(y, 0.5);
  EXPECT_NEAR(p[0], std::exp(2.0) / (std::exp(2.0) + 1), 1e-15);
  EXPECT_NEAR(p[0], 0.8808, 1e-4);
  EXPECT_NEAR(p[1], 0.1192, 1e-4);
  VectorXd z(3);
  z << 3, 1, -2;
  p = softmax_temperature(z, 1e6);
  for (auto v : p) EXPECT_NEAR(v, 1.0 / 3, 1e-5);
}

TEST(Softmax, NormalizedAndArgmaxInvariant) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    VectorXd y = random_vector(1 + rng.below(80), rng, 20);
    Eigen::Index want;
    y.maxCoeff(&want);
    for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0}) {
      auto p = softmax_temperature(y, t);
      EXPECT_NEAR(p.sum(), 1.0, 1e-12);
      Eigen::Index got;
      p.maxCoeff(&got);
      EXPECT_EQ(got, want);
    }
  }
}

TEST(Softmax, Errors) {
  VectorXd y = VectorXd::Zero(3);
  EXPECT_THROW(softmax_temperature(y, 0), ArgumentError);
  EXPECT_THROW(softmax_temperature(y, -1), ArgumentError);
  y[1] = std::nan("");
  EXPECT_THROW(softmax_temperature(y, 1), ArgumentError);
  y[1] = INFINITY;
  EXPECT_THROW(softmax_temperature(y, 1), ArgumentError);
}

TEST(Model, BatchedForwardMatchesStepping) {
  auto corpus = testing::iid_text(200, U"abcdef", 2);
  LstmModel model(tiny_config(2, 7), corpus.alphabet());
  const auto t = corpus.chars();
  // Two streams over different offsets, 12 steps.
  const std::size_t steps = 12, streams = 2, offs[2] = {0, 50};
  std::vector<Symbol> in, out;
  for (std::size_t s = 0; s < steps; ++s) {
    for (auto o : offs) in.push_back(t[o + s]), out.push_back(t[o + s + 1]);
  }
  BatchState bs = BatchState::zeros(model, streams);
  const double batched = chunk_loss(model, in, out, streams, bs, {}, nullptr);
  double stepped = 0;
  for (std::size_t b = 0; b < streams; ++b) {
    auto st = model.zero_state();
    for (std::size_t s = 0; s < steps; ++s) {
      auto p = softmax_temperature(model.step(st, t[offs[b] + s]), 1);
      stepped -= std::log(p[t[offs[b] + s + 1]]);
    }
    EXPECT_LT((st.h[1] - bs.h[1].col(b)).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_NEAR(batched, stepped, 1e-10);
}

TEST(Model, InitialisationShape) {
  LstmModel m(tiny_config(2, 10), {U'a', U'b', U'c'});
  const double r = 1 / std::sqrt(10.0);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(m.layer(l).gate(Gate::forget).b, VectorXd::Ones(10));
    EXPECT_LE(m.layer(l).W.cwiseAbs().maxCoeff(), r);
    EXPECT_LE(m.layer(l).gate(Gate::input).b.cwiseAbs().maxCoeff(), r);
  }
  EXPECT_EQ(m.layer(0).input_size(), 3u);
  EXPECT_EQ(m.layer(1).input_size(), 10u);
  EXPECT_EQ(m.parameter_count(), 4u * 10 * (3 + 10 + 1) + 4u * 10 * (10 + 10 + 1) + 3 * 10 + 3);
  VectorXd flat = m.pack();
  LstmModel copy = m;
  copy.unpack(flat);
  EXPECT_EQ(copy.pack(), flat);
}

struct CheckCase {
  std::size_t layers;
  double keep;
};

class GradientCheck : public ::testing::TestWithParam<CheckCase> {};

TEST_P(GradientCheck, AnalyticMatchesFiniteDifferences) {
  const auto [layers, keep] = GetParam();
  // Symbol 'e' never occurs, so its input column gets no gradient.
  auto corpus = Corpus::from_text(U"abcdabddcbaacdbe");
  LstmModel model(tiny_config(layers, 4, keep), corpus.alphabet());
  const std::size_t steps = 5, streams = 2;
  std::vector<Symbol> in, out;
  const auto t = corpus.chars();
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t b = 0; b < streams; ++b) {
      in.push_back(t[b * 7 + s]);
      out.push_back(t[b * 7 + s + 1]);
    }
  }
  Rng rng(11);
  BatchState start = BatchState::zeros(model, streams);
  for (auto& h : start.h) h = MatrixXd::Random(h.rows(), h.cols()) * 0.5;
  for (auto& c : start.c) c = MatrixXd::Random(c.rows(), c.cols());
  DropoutMasks masks = draw_masks(model, steps, streams, keep, rng);
  auto r = gradient_check(model, in, out, streams, start, masks);
  EXPECT_LT(r.max_relative_error, 1e-4) << "worst parameter " << r.worst_index;
  // Column of the unused symbol in the first layer's W.
  const Eigen::Index unused = static_cast<Eigen::Index>(*model.symbol_of(U'e'));
  for (Eigen::Index row = 0; row < 16; ++row) {
    const Eigen::Index k = unused * 16 + row;
    EXPECT_EQ(r.analytic[k], 0.0);
    EXPECT_EQ(r.numeric[k], 0.0);
  }
  auto corrupted = gradient_check(model, in, out, streams, start, masks, 1e-4,
                                  [&](VectorXd& g) { g[r.analytic.size() - 1] *= 1.01; });
  EXPECT_GT(corrupted.max_relative_error, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Shapes, GradientCheck,
                         ::testing::Values(CheckCase{1, 1.0}, CheckCase{2, 1.0},
                                           CheckCase{1, 0.6}, CheckCase{2, 0.6}));

TEST(Train, InitialLossIsLogAlphabet) {
  auto corpus = testing::iid_text(5000, U"abcdefghijklmnop", 1);
  auto cfg = tiny_config(1, 16);
  cfg.epochs = 0;
  auto r = train_bptt(corpus, cfg);
  EXPECT_NEAR(r.initial_validation_loss, std::log(16.0), 0.2 * std::log(16.0));
}

TEST(Train, PeriodTwoIsLearnt) {
  std::u32string s;
  for (int i = 0; i < 10000; ++i) s.push_back(i % 2 ? U'b' : U'a');
  TrainConfig cfg;
  cfg.layers = 1;
  cfg.hidden_size = 16;
  cfg.window = cfg.bptt_steps = 50;
  cfg.dropout_keep = 1.0;
  cfg.epochs = 5;
  cfg.batch_size = 8;
  std::vector<double> seen;
  auto r = train_bptt(Corpus::from_text(s), cfg,
                      {[&](const EpochReport& e) { seen.push_back(e.validation_loss); }, {}});
  ASSERT_EQ(seen.size(), 5u);
  EXPECT_LT(r.history.back().validation_loss, 0.05);
}

TEST(Train, DeterministicPerSeed) {
  auto corpus = testing::iid_text(3000, U"abcde", 4);
  auto cfg = tiny_config(2, 8, 0.8);
  cfg.epochs = 1;
  auto a = train_bptt(corpus, cfg), b = train_bptt(corpus, cfg);
  EXPECT_EQ(a.model.pack(), b.model.pack());
  cfg.seed = 4;
  EXPECT_NE(train_bptt(corpus, cfg).model.pack(), a.model.pack());
}

TEST(Train, MasksOnlyBetweenLayers) {
  auto corpus = testing::iid_text(2000, U"abcde", 4);
  auto cfg = tiny_config(2, 8, 0.7);
  cfg.epochs = 1;
  std::set<std::size_t> sites;
  bool only_scaled = true;
  auto observer = [&](std::size_t site, std::size_t, const MatrixXd& m) {
    sites.insert(site);
    EXPECT_EQ(m.rows(), 8);
    for (auto v : m.reshaped()) only_scaled &= v == 0.0 || std::abs(v - 1 / 0.7) < 1e-15;
  };
  train_bptt(corpus, cfg, {{}, observer});
  // Site 0: layer 1 -> layer 2; site 1: layer 2 -> softmax. Nothing on the
  // one-hot input, nothing on the recurrent path.
  EXPECT_EQ(sites, (std::set<std::size_t>{0, 1}));
  EXPECT_TRUE(only_scaled);
  cfg.dropout_keep = 1.0;
  sites.clear();
  train_bptt(corpus, cfg, {{}, observer});
  EXPECT_TRUE(sites.empty());
}

TEST(Train, ConfigValidation) {
  auto corpus = testing::iid_text(2000, U"abcde", 4);
  auto cfg = tiny_config(1, 4);
  cfg.window = 7;
  EXPECT_THROW(train_bptt(corpus, cfg), ArgumentError);
  cfg = tiny_config(1, 4, 0.0);
  EXPECT_THROW(train_bptt(corpus, cfg), ArgumentError);
  cfg = tiny_config(1, 4);
  EXPECT_THROW(train_bptt(Corpus::from_text(U"abcdef"), cfg), ArgumentError);
  cfg.learning_rate = INFINITY;
  EXPECT_THROW(train_bptt(corpus, cfg), ArgumentError);
}

TEST(Train, NonFiniteLossNamesLearningRate) {
  try {
    detail::check_loss(NAN, "training", 3, 0.5);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("epoch 3"), std::string::npos);
  }
  EXPECT_NO_THROW(detail::check_loss(1.5, "training", 1, 0.5));
}

class Sampling : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    std::u32string s;
    const std::u32string phrase = U"the cat sat on the mat. ";
    for (int i = 0; i < 300; ++i) s += phrase;
    TrainConfig cfg;
    cfg.layers = 1;
    cfg.hidden_size = 24;
    cfg.window = cfg.bptt_steps = 30;
    cfg.dropout_keep = 1.0;
    cfg.epochs = 8;
    cfg.batch_size = 8;
    model_ = new LstmModel(train_bptt(Corpus::from_text(s), cfg).model);
  }
  static void TearDownTestSuite() { delete model_; }
  static LstmModel* model_;
};
LstmModel* Sampling::model_ = nullptr;

TEST_F(Sampling, DeterministicAndContinuationOnly) {
  auto a = sample_text(*model_, U"the ", 200, 1.0, 5);
  EXPECT_EQ(a.size(), 200u);
  EXPECT_EQ(a, sample_text(*model_, U"the ", 200, 1.0, 5));
  EXPECT_NE(a, sample_text(*model_, U"the ", 200, 1.0, 6));
}

TEST_F(Sampling, LowTemperatureFollowsArgmax) {
  std::size_t agree = 0, total = 0;
  auto observe = [&](const VectorXd& p, Symbol chosen) {
    Eigen::Index best;
    p.maxCoeff(&best);
    agree += static_cast<Symbol>(best) == chosen;
    ++total;
  };
  sample_text(*model_, U"the c", 2000, 0.01, 9, observe);
  EXPECT_GE(static_cast<double>(agree) / total, 0.99);
}

TEST_F(Sampling, HighTemperatureIsNearUniform) {
  const std::size_t s = model_->alphabet_size();
  std::vector<double> counts(s, 0);
  auto observe = [&](const VectorXd&, Symbol c) { counts[c] += 1; };
  const std::size_t n = 40000;
  sample_text(*model_, U"the ", n, 1e4, 3, observe);
  for (auto c : counts) EXPECT_NEAR(c / n, 1.0 / s, 0.01);
}

TEST_F(Sampling, UnknownSeedCharacterListed) {
  try {
    sample_text(*model_, U"the dog", 10, 1.0, 1);
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("'d'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'g'"), std::string::npos);
  }
}

TEST_F(Sampling, CheckpointRoundTrip) {
  std::stringstream buf;
  model_->save(buf);
  auto loaded = LstmModel::load(buf);
  EXPECT_EQ(loaded.pack(), model_->pack());
  EXPECT_EQ(loaded.alphabet(), model_->alphabet());
  EXPECT_EQ(loaded.config().hidden_size, model_->config().hidden_size);
  EXPECT_EQ(sample_text(loaded, U"the ", 100, 0.8, 2), sample_text(*model_, U"the ", 100, 0.8, 2));
  std::stringstream bad("LGSTMKV\nxxxx");
  EXPECT_THROW(LstmModel::load(bad), FormatError);
}

}  // namespace
}  // namespace lingstat
