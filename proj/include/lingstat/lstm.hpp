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
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lingstat/binary_io.hpp"
#include "lingstat/corpus.hpp"
#include "lingstat/error.hpp"
#include "lingstat/random.hpp"
#include "lingstat/utf8.hpp"

namespace lingstat {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Row-block order of the stacked gate parameters.
enum class Gate { forget = 0, input = 1, output = 2, candidate = 3 };

struct GateParams {
  MatrixXd W;  // hidden x input
  MatrixXd U;  // hidden x hidden
  VectorXd b;
};

// One layer with the four gates stacked as 4H rows in Gate order.
struct LstmLayer {
  MatrixXd W;  // 4H x input
  MatrixXd U;  // 4H x H
  VectorXd b;  // 4H

  LstmLayer() = default;
  LstmLayer(std::size_t input_size, std::size_t hidden_size)
      : W(MatrixXd::Zero(4 * idx(hidden_size), idx(input_size))),
        U(MatrixXd::Zero(4 * idx(hidden_size), idx(hidden_size))),
        b(VectorXd::Zero(4 * idx(hidden_size))) {}

  std::size_t hidden_size() const { return static_cast<std::size_t>(U.cols()); }
  std::size_t input_size() const { return static_cast<std::size_t>(W.cols()); }

  GateParams gate(Gate g) const {
    const auto h = U.cols();
    const auto r = static_cast<Eigen::Index>(g) * h;
    return {W.middleRows(r, h), U.middleRows(r, h), b.segment(r, h)};
  }

  void set_gate(Gate g, const GateParams& p) {
    const auto h = U.cols();
    const auto r = static_cast<Eigen::Index>(g) * h;
    if (p.W.rows() != h || p.W.cols() != W.cols() || p.U.rows() != h || p.U.cols() != h ||
        p.b.size() != h) {
      throw ArgumentError("gate parameters do not match the layer shape");
    }
    W.middleRows(r, h) = p.W;
    U.middleRows(r, h) = p.U;
    b.segment(r, h) = p.b;
  }

  static Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }
};

struct LstmState {
  std::vector<VectorXd> h;
  std::vector<VectorXd> c;
};

struct SoftmaxHead {
  MatrixXd W;  // S x H
  VectorXd b;  // S
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Eqs. of a single LSTM layer step. The optional mask multiplies x only;
// the recurrent input h_prev is never masked.
inline std::pair<VectorXd, VectorXd> lstm_step(const LstmLayer& layer, const VectorXd& x,
                                               const VectorXd& h_prev, const VectorXd& c_prev,
                                               const VectorXd* dropout_mask = nullptr) {
  const auto h = layer.U.cols();
  if (x.size() != layer.W.cols() || h_prev.size() != h || c_prev.size() != h ||
      (dropout_mask && dropout_mask->size() != x.size())) {
    throw ArgumentError("lstm_step: dimension mismatch");
  }
  VectorXd z = layer.U * h_prev + layer.b;
  if (dropout_mask) {
    z.noalias() += layer.W * x.cwiseProduct(*dropout_mask);
  } else {
    z.noalias() += layer.W * x;
  }
  VectorXd c(h), out(h);
  for (Eigen::Index k = 0; k < h; ++k) {
    const double f = detail::sigmoid(z[k]);
    const double i = detail::sigmoid(z[h + k]);
    const double o = detail::sigmoid(z[2 * h + k]);
    const double g = std::tanh(z[3 * h + k]);
    c[k] = f * c_prev[k] + i * g;
    out[k] = o * std::tanh(c[k]);
  }
  return {out, c};
}

// P_j = exp(y_j / T) / sum_i exp(y_i / T), shifted by the max for stability.
inline VectorXd softmax_temperature(const VectorXd& logits, double temperature) {
  if (!(temperature > 0) || !std::isfinite(temperature)) {
    throw ArgumentError("temperature must be positive and finite");
  }
  if (logits.size() == 0) throw ArgumentError("softmax of an empty vector");
  if (!logits.allFinite()) throw ArgumentError("softmax logits must be finite");
  const double m = logits.maxCoeff();
  VectorXd p = ((logits.array() - m) / temperature).exp().matrix();
  p /= p.sum();
  return p;
}

struct TrainConfig {
  std::size_t layers = 2;
  std::size_t hidden_size = 128;
  std::size_t window = 100;      // M, characters per training example
  std::size_t bptt_steps = 100;  // K
  double dropout_keep = 0.7;     // p
  double learning_rate = 2e-3;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double validation_fraction = 0.04;
  std::size_t batch_size = 32;  // parallel streams through the training text
  double grad_clip = 5.0;
  bool carry_state = true;  // false resets state at every chunk (also in validation)

  void validate() const {
    if (layers < 1) throw ArgumentError("layers must be at least 1");
    if (hidden_size < 1) throw ArgumentError("hidden_size must be at least 1");
    if (bptt_steps < 1) throw ArgumentError("bptt_steps must be at least 1");
    if (window != bptt_steps) {
      throw ArgumentError("window (M) must equal bptt_steps (K): examples are BPTT chunks");
    }
    if (!(dropout_keep > 0 && dropout_keep <= 1)) {
      throw ArgumentError("dropout_keep must lie in (0, 1]");
    }
    if (!(learning_rate > 0 && std::isfinite(learning_rate))) {
      throw ArgumentError("learning_rate must be positive and finite");
    }
    if (!(validation_fraction > 0 && validation_fraction < 1)) {
      throw ArgumentError("validation_fraction must lie in (0, 1)");
    }
    if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  }
};

// Character-level model: stacked LSTM layers fed one-hot characters, with
// a softmax head over the alphabet.
class LstmModel {
 public:
  static constexpr const char* kMagic = "LGSTLSTM";
  static constexpr std::uint32_t kVersion = 1;

  LstmModel() = default;

  // Uniform init in +-1/sqrt(H), forget bias +1.
  LstmModel(const TrainConfig& config, std::vector<char32_t> alphabet)
      : config_(config), alphabet_(std::move(alphabet)) {
    if (alphabet_.empty()) throw ArgumentError("model alphabet is empty");
    const std::size_t s = alphabet_.size(), h = config.hidden_size;
    for (std::size_t l = 0; l < config.layers; ++l) layers_.emplace_back(l == 0 ? s : h, h);
    head_.W = MatrixXd::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(h));
    head_.b = VectorXd::Zero(static_cast<Eigen::Index>(s));
    Rng rng(derive_seed(config.seed, {0x1A17}));
    const double r = 1.0 / std::sqrt(static_cast<double>(h));
    VectorXd flat(parameter_count());
    for (auto& v : flat) v = rng.uniform(-r, r);
    unpack(flat);
    for (auto& layer : layers_) {
      layer.b.segment(0, static_cast<Eigen::Index>(h)).setOnes();
    }
  }

  const TrainConfig& config() const { return config_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }
  std::size_t alphabet_size() const { return alphabet_.size(); }
  std::size_t hidden_size() const { return config_.hidden_size; }
  std::size_t layer_count() const { return layers_.size(); }
  const LstmLayer& layer(std::size_t l) const { return layers_[l]; }
  LstmLayer& layer(std::size_t l) { return layers_[l]; }
  const SoftmaxHead& head() const { return head_; }
  SoftmaxHead& head() { return head_; }

  std::optional<Symbol> symbol_of(char32_t c) const {
    auto it = std::find(alphabet_.begin(), alphabet_.end(), c);
    if (it == alphabet_.end()) return std::nullopt;
    return static_cast<Symbol>(it - alphabet_.begin());
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.W.size() + l.U.size() + l.b.size();
    return n + head_.W.size() + head_.b.size();
  }

  // Flat view order: per layer W, U, b (column-major), then head W, b.
  VectorXd pack() const {
    VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index o = 0;
    auto put = [&](const auto& m) {
      out.segment(o, m.size()) = m.reshaped();
      o += m.size();
    };
    for (const auto& l : layers_) put(l.W), put(l.U), put(l.b);
    put(head_.W), put(head_.b);
    return out;
  }

  void unpack(const VectorXd& flat) {
    if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
      throw ArgumentError("parameter vector has the wrong length");
    }
    Eigen::Index o = 0;
    auto get = [&](auto& m) {
      m.reshaped() = flat.segment(o, m.size());
      o += m.size();
    };
    for (auto& l : layers_) get(l.W), get(l.U), get(l.b);
    get(head_.W), get(head_.b);
  }

  LstmState zero_state(Eigen::Index streams = 1) const {
    LstmState s;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      s.h.push_back(VectorXd::Zero(static_cast<Eigen::Index>(hidden_size()) * streams));
      s.c.push_back(VectorXd::Zero(static_cast<Eigen::Index>(hidden_size()) * streams));
    }
    return s;
  }

  // Advances a single stream by one character and returns the logits.
  VectorXd step(LstmState& state, Symbol input) const {
    VectorXd x = VectorXd::Zero(static_cast<Eigen::Index>(alphabet_size()));
    x[input] = 1;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto [h, c] = lstm_step(layers_[l], x, state.h[l], state.c[l]);
      state.h[l] = h;
      state.c[l] = std::move(c);
      x = std::move(h);
    }
    return head_.W * x + head_.b;
  }

  void save(std::ostream& out) const {
    io::Writer w(out);
    w.magic(kMagic);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint64_t>(config_.layers);
    w.put<std::uint64_t>(config_.hidden_size);
    w.put<std::uint64_t>(config_.window);
    w.put<std::uint64_t>(config_.bptt_steps);
    w.put<double>(config_.dropout_keep);
    w.put<double>(config_.learning_rate);
    w.put<std::uint64_t>(config_.epochs);
    w.put<std::uint64_t>(config_.seed);
    w.put<double>(config_.validation_fraction);
    w.put<std::uint64_t>(config_.batch_size);
    w.put<double>(config_.grad_clip);
    w.put<std::uint8_t>(config_.carry_state ? 1 : 0);
    w.put_vector(std::vector<std::uint32_t>(alphabet_.begin(), alphabet_.end()));
    const VectorXd flat = pack();
    w.put_vector(std::vector<double>(flat.begin(), flat.end()));
    w.finish();
  }

  static LstmModel load(std::istream& in) {
    io::Reader r(in);
    r.expect_magic(kMagic);
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
      throw FormatError("unsupported LSTM checkpoint version " + std::to_string(version));
    }
    TrainConfig c;
    c.layers = r.get<std::uint64_t>();
    c.hidden_size = r.get<std::uint64_t>();
    c.window = r.get<std::uint64_t>();
    c.bptt_steps = r.get<std::uint64_t>();
    c.dropout_keep = r.get<double>();
    c.learning_rate = r.get<double>();
    c.epochs = r.get<std::uint64_t>();
    c.seed = r.get<std::uint64_t>();
    c.validation_fraction = r.get<double>();
    c.batch_size = r.get<std::uint64_t>();
    c.grad_clip = r.get<double>();
    c.carry_state = r.get<std::uint8_t>() != 0;
    if (c.layers == 0 || c.layers > 64 || c.hidden_size == 0 || c.hidden_size > (1u << 16)) {
      throw FormatError("implausible LSTM shape in checkpoint");
    }
    auto alpha = r.get_vector<std::uint32_t>(1u << 21);
    if (alpha.empty()) throw FormatError("checkpoint has an empty alphabet");
    LstmModel m;
    m.config_ = c;
    m.alphabet_.assign(alpha.begin(), alpha.end());
    const std::size_t s = alpha.size(), h = c.hidden_size;
    for (std::size_t l = 0; l < c.layers; ++l) m.layers_.emplace_back(l == 0 ? s : h, h);
    m.head_.W = MatrixXd::Zero(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(h));
    m.head_.b = VectorXd::Zero(static_cast<Eigen::Index>(s));
    auto flat = r.get_vector<double>();
    if (flat.size() != m.parameter_count()) {
      throw FormatError("checkpoint parameter count does not match its shape");
    }
    m.unpack(Eigen::Map<const VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    save(out);
  }

  static LstmModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    return load(in);
  }

 private:
  TrainConfig config_;
  std::vector<char32_t> alphabet_;
  std::vector<LstmLayer> layers_;
  SoftmaxHead head_;
};

// Dropout masks for one chunk. Site l < L is the input of layer l+1 (the
// output of layer l); site L-1 feeds the softmax head. Layer 0 reads the
// raw one-hot input and is never masked. Entries are 0 or 1/p.
struct DropoutMasks {
  std::size_t sites = 0;
  std::vector<MatrixXd> per_step;  // [t * sites + site], H x B

  bool empty() const { return per_step.empty(); }
  const MatrixXd& at(std::size_t t, std::size_t site) const { return per_step[t * sites + site]; }
};

// site, step, mask: lets tests see exactly where masks are drawn.
using MaskObserver = std::function<void(std::size_t, std::size_t, const MatrixXd&)>;

inline DropoutMasks draw_masks(const LstmModel& model, std::size_t steps, std::size_t streams,
                               double keep, Rng& rng, const MaskObserver& observer = {}) {
  DropoutMasks m;
  if (keep >= 1) return m;
  m.sites = model.layer_count();
  const auto h = static_cast<Eigen::Index>(model.hidden_size());
  const auto b = static_cast<Eigen::Index>(streams);
  m.per_step.reserve(steps * m.sites);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t s = 0; s < m.sites; ++s) {
      MatrixXd mask(h, b);
      for (Eigen::Index j = 0; j < b; ++j) {
        for (Eigen::Index i = 0; i < h; ++i) mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
      if (observer) observer(s, t, mask);
      m.per_step.push_back(std::move(mask));
    }
  }
  return m;
}

// Batched state: column b of every matrix belongs to stream b.
struct BatchState {
  std::vector<MatrixXd> h;
  std::vector<MatrixXd> c;

  static BatchState zeros(const LstmModel& model, std::size_t streams) {
    BatchState s;
    const auto h = static_cast<Eigen::Index>(model.hidden_size());
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
      s.h.push_back(MatrixXd::Zero(h, static_cast<Eigen::Index>(streams)));
      s.c.push_back(MatrixXd::Zero(h, static_cast<Eigen::Index>(streams)));
    }
    return s;
  }
};

// Gradient of the summed loss in the flat parameter order of pack().
struct Gradients {
  std::vector<LstmLayer> layers;
  SoftmaxHead head;

  explicit Gradients(const LstmModel& m) {
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      layers.emplace_back(m.layer(l).input_size(), m.hidden_size());
    }
    head.W = MatrixXd::Zero(m.head().W.rows(), m.head().W.cols());
    head.b = VectorXd::Zero(m.head().b.size());
  }

  VectorXd flat() const {
    Eigen::Index n = head.W.size() + head.b.size();
    for (const auto& l : layers) n += l.W.size() + l.U.size() + l.b.size();
    VectorXd out(n);
    Eigen::Index o = 0;
    auto put = [&](const auto& m) {
      out.segment(o, m.size()) = m.reshaped();
      o += m.size();
    };
    for (const auto& l : layers) put(l.W), put(l.U), put(l.b);
    put(head.W), put(head.b);
    return out;
  }
};

// Forward and backward over one chunk of `steps` characters for `streams`
// parallel streams. inputs/targets are laid out [t * streams + b]. Returns
// the summed cross-entropy in nats; `state` is advanced to the chunk end.
// With grad == nullptr only the forward pass runs.
inline double chunk_loss(const LstmModel& model, std::span<const Symbol> inputs,
                         std::span<const Symbol> targets, std::size_t streams, BatchState& state,
                         const DropoutMasks& masks, Gradients* grad) {
  const std::size_t steps = inputs.size() / streams;
  const std::size_t layers = model.layer_count();
  const auto H = static_cast<Eigen::Index>(model.hidden_size());
  const auto B = static_cast<Eigen::Index>(streams);
  const bool dropout = !masks.empty();

  struct Tape {
    MatrixXd x;       // masked input (layers >= 1 only)
    MatrixXd h_prev, c_prev;
    MatrixXd f, i, o, g, c, tc, h;
  };
  std::vector<Tape> tape(grad ? steps * layers : 0);
  std::vector<MatrixXd> head_in(grad ? steps : 0);
  std::vector<MatrixXd> probs(grad ? steps : 0);

  double loss = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    MatrixXd below;
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& p = model.layer(l);
      MatrixXd z = p.U * state.h[l];
      z.colwise() += p.b;
      MatrixXd x;
      if (l == 0) {
        for (Eigen::Index b = 0; b < B; ++b) z.col(b) += p.W.col(inputs[t * streams + b]);
      } else {
        x = dropout ? MatrixXd(below.cwiseProduct(masks.at(t, l - 1))) : below;
        z.noalias() += p.W * x;
      }
      Tape tp;
      auto sig = [](double v) { return detail::sigmoid(v); };
      tp.f = z.topRows(H).unaryExpr(sig);
      tp.i = z.middleRows(H, H).unaryExpr(sig);
      tp.o = z.middleRows(2 * H, H).unaryExpr(sig);
      tp.g = z.bottomRows(H).array().tanh().matrix();
      tp.c = tp.f.cwiseProduct(state.c[l]) + tp.i.cwiseProduct(tp.g);
      tp.tc = tp.c.array().tanh().matrix();
      tp.h = tp.o.cwiseProduct(tp.tc);
      below = tp.h;
      if (grad) {
        tp.x = std::move(x);
        tp.h_prev = state.h[l];
        tp.c_prev = state.c[l];
      }
      state.h[l] = tp.h;
      state.c[l] = tp.c;
      if (grad) tape[t * layers + l] = std::move(tp);
    }
    MatrixXd top = dropout ? MatrixXd(below.cwiseProduct(masks.at(t, layers - 1))) : below;
    MatrixXd logits = model.head().W * top;
    logits.colwise() += model.head().b;
    for (Eigen::Index b = 0; b < B; ++b) {
      auto col = logits.col(b);
      const double m = col.maxCoeff();
      col = (col.array() - m).exp().matrix();
      const double sum = col.sum();
      col /= sum;
      loss -= std::log(col[targets[t * streams + b]]);
    }
    if (grad) {
      head_in[t] = std::move(top);
      probs[t] = std::move(logits);
    }
  }
  if (!grad) return loss;

  std::vector<MatrixXd> dh_next(layers, MatrixXd::Zero(H, B));
  std::vector<MatrixXd> dc_next(layers, MatrixXd::Zero(H, B));
  MatrixXd dz(4 * H, B);
  for (std::size_t tt = steps; tt-- > 0;) {
    MatrixXd dy = probs[tt];
    for (Eigen::Index b = 0; b < B; ++b) dy(targets[tt * streams + b], b) -= 1;
    grad->head.W.noalias() += dy * head_in[tt].transpose();
    grad->head.b += dy.rowwise().sum();
    MatrixXd dh = model.head().W.transpose() * dy;
    if (dropout) dh = dh.cwiseProduct(masks.at(tt, layers - 1));
    for (std::size_t l = layers; l-- > 0;) {
      const Tape& tp = tape[tt * layers + l];
      dh += dh_next[l];
      const MatrixXd dc = dh.cwiseProduct(tp.o).cwiseProduct(
                              (1.0 - tp.tc.array().square()).matrix()) +
                          dc_next[l];
      dz.topRows(H) = dc.cwiseProduct(tp.c_prev).cwiseProduct(
          tp.f.cwiseProduct((1.0 - tp.f.array()).matrix()));
      dz.middleRows(H, H) =
          dc.cwiseProduct(tp.g).cwiseProduct(tp.i.cwiseProduct((1.0 - tp.i.array()).matrix()));
      dz.middleRows(2 * H, H) =
          dh.cwiseProduct(tp.tc).cwiseProduct(tp.o.cwiseProduct((1.0 - tp.o.array()).matrix()));
      dz.bottomRows(H) =
          dc.cwiseProduct(tp.i).cwiseProduct((1.0 - tp.g.array().square()).matrix());
      dc_next[l] = dc.cwiseProduct(tp.f);
      auto& gl = grad->layers[l];
      const auto& p = model.layer(l);
      gl.U.noalias() += dz * tp.h_prev.transpose();
      gl.b += dz.rowwise().sum();
      dh_next[l].noalias() = p.U.transpose() * dz;
      if (l == 0) {
        for (Eigen::Index b = 0; b < B; ++b) gl.W.col(inputs[tt * streams + b]) += dz.col(b);
      } else {
        gl.W.noalias() += dz * tp.x.transpose();
        dh = p.W.transpose() * dz;
        if (dropout) dh = dh.cwiseProduct(masks.at(tt, l - 1));
      }
    }
  }
  return loss;
}

struct EpochReport {
  std::size_t epoch = 0;         // 1-based
  double train_loss = 0;         // nats/char, mean over the epoch
  double validation_loss = 0;    // nats/char
};

struct TrainHooks {
  std::function<void(const EpochReport&)> progress;
  MaskObserver mask_observer;
};

namespace detail {

inline void check_loss(double loss, const char* what, std::size_t epoch, double lr) {
  if (std::isfinite(loss)) return;
  throw TrainingError(std::string("non-finite ") + what + " loss in epoch " +
                      std::to_string(epoch) + "; training diverged, try a learning_rate below " +
                      std::to_string(lr));
}

}  // namespace detail

struct TrainResult {
  LstmModel model;
  std::vector<EpochReport> history;
  double initial_validation_loss = 0;
};

// Mean next-character loss in nats over `text`, read as a single stream
// from the zero state without dropout. With carry_state off the state is
// reset every K characters, matching how such a model was trained.
inline double validation_loss(const LstmModel& model, std::span<const Symbol> text) {
  if (text.size() < 2) throw ArgumentError("validation text needs at least 2 characters");
  const std::size_t k = model.config().bptt_steps;
  BatchState state = BatchState::zeros(model, 1);
  double loss = 0;
  const std::size_t n = text.size() - 1;
  for (std::size_t start = 0; start < n; start += k) {
    const std::size_t len = std::min(k, n - start);
    if (!model.config().carry_state) state = BatchState::zeros(model, 1);
    loss += chunk_loss(model, text.subspan(start, len), text.subspan(start + 1, len), 1, state,
                       DropoutMasks{}, nullptr);
  }
  return loss / static_cast<double>(n);
}

// Truncated BPTT over B streams that start at evenly spaced offsets of the
// training split. Each update covers K characters per stream; the state at
// the end of a chunk seeds the next one unless carry_state is off. Adam
// with bias correction and global-norm clipping.
inline TrainResult train_bptt(const Corpus& corpus, const TrainConfig& config,
                              const TrainHooks& hooks = {}) {
  config.validate();
  const std::size_t k = config.bptt_steps;
  if (corpus.size() <= k + 1) {
    throw ArgumentError("corpus of " + std::to_string(corpus.size()) +
                        " characters is too short for K = " + std::to_string(k));
  }
  auto [train, valid] = split(corpus, config.validation_fraction);
  if (valid.size() < 2) throw ArgumentError("validation split is too short");
  const std::size_t streams =
      std::min<std::size_t>(config.batch_size, (train.size() - 1) / k);
  if (streams == 0) throw ArgumentError("training split is shorter than one chunk");
  const std::size_t stream_len = (train.size() - 1) / streams;
  const std::size_t chunks = stream_len / k;

  TrainResult result{LstmModel(config, corpus.alphabet()), {}, 0};
  LstmModel& model = result.model;
  result.initial_validation_loss = validation_loss(model, valid.chars());

  Rng rng(derive_seed(config.seed, {0xD20B}));
  VectorXd theta = model.pack();
  VectorXd m1 = VectorXd::Zero(theta.size()), m2 = VectorXd::Zero(theta.size());
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t t_adam = 0;

  std::vector<Symbol> in(k * streams), out(k * streams);
  const auto text = train.chars();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    BatchState state = BatchState::zeros(model, streams);
    double epoch_loss = 0;
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t b = 0; b < streams; ++b) {
          const std::size_t pos = b * stream_len + ch * k + t;
          in[t * streams + b] = text[pos];
          out[t * streams + b] = text[pos + 1];
        }
      }
      if (!config.carry_state) state = BatchState::zeros(model, streams);
      const DropoutMasks masks =
          draw_masks(model, k, streams, config.dropout_keep, rng, hooks.mask_observer);
      Gradients g(model);
      const double count = static_cast<double>(k * streams);
      const double loss = chunk_loss(model, in, out, streams, state, masks, &g) / count;
      detail::check_loss(loss, "training", epoch, config.learning_rate);
      epoch_loss += loss;
      VectorXd grad = g.flat() / count;
      const double norm = grad.norm();
      if (config.grad_clip > 0 && norm > config.grad_clip) grad *= config.grad_clip / norm;
      ++t_adam;
      m1 = beta1 * m1 + (1 - beta1) * grad;
      m2 = beta2 * m2 + (1 - beta2) * grad.cwiseProduct(grad);
      const double c1 = 1 - std::pow(beta1, static_cast<double>(t_adam));
      const double c2 = 1 - std::pow(beta2, static_cast<double>(t_adam));
      theta.array() -= config.learning_rate * (m1.array() / c1) /
                       ((m2.array() / c2).sqrt() + eps);
      model.unpack(theta);
    }
    EpochReport rep{epoch, chunks ? epoch_loss / static_cast<double>(chunks) : 0,
                    validation_loss(model, valid.chars())};
    detail::check_loss(rep.validation_loss, "validation", epoch, config.learning_rate);
    result.history.push_back(rep);
    if (hooks.progress) hooks.progress(rep);
  }
  return result;
}

struct GradientCheckResult {
  double max_relative_error = 0;
  std::size_t worst_index = 0;
  VectorXd analytic;
  VectorXd numeric;
};

// Central differences on the summed chunk loss for every parameter. The
// masks are held fixed. `mutate` may alter the analytic gradient before the
// comparison, which is how the checker tests itself.
inline GradientCheckResult gradient_check(
    const LstmModel& model, std::span<const Symbol> inputs, std::span<const Symbol> targets,
    std::size_t streams, const BatchState& initial, const DropoutMasks& masks = {},
    double epsilon = 1e-4, const std::function<void(VectorXd&)>& mutate = {}) {
  Gradients g(model);
  BatchState s = initial;
  chunk_loss(model, inputs, targets, streams, s, masks, &g);
  GradientCheckResult r;
  r.analytic = g.flat();
  if (mutate) mutate(r.analytic);
  const VectorXd theta = model.pack();
  r.numeric = VectorXd::Zero(theta.size());
  LstmModel probe = model;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    VectorXd t = theta;
    t[i] = theta[i] + epsilon;
    probe.unpack(t);
    BatchState sp = initial;
    const double lp = chunk_loss(probe, inputs, targets, streams, sp, masks, nullptr);
    t[i] = theta[i] - epsilon;
    probe.unpack(t);
    BatchState sm = initial;
    const double lm = chunk_loss(probe, inputs, targets, streams, sm, masks, nullptr);
    r.numeric[i] = (lp - lm) / (2 * epsilon);
    const double ga = r.analytic[i], gn = r.numeric[i];
    const double rel = std::abs(ga - gn) / std::max(std::abs(ga) + std::abs(gn), 1e-8);
    if (rel > r.max_relative_error) r.max_relative_error = rel, r.worst_index = static_cast<std::size_t>(i);
  }
  return r;
}

// Called per generated character with the distribution it was drawn from.
using SampleObserver = std::function<void(const VectorXd& probs, Symbol chosen)>;

namespace detail {

inline std::vector<Symbol> seed_symbols(const LstmModel& model, std::u32string_view seed) {
  if (seed.empty()) throw ArgumentError("seed text must not be empty");
  std::vector<Symbol> out;
  std::u32string unknown;
  for (char32_t c : seed) {
    auto s = model.symbol_of(c);
    if (s) {
      out.push_back(*s);
    } else if (unknown.find(c) == std::u32string::npos) {
      unknown.push_back(c);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (char32_t c : unknown) {
      if (!list.empty()) list += ", ";
      list += "'" + utf8::encode(std::u32string(1, c)) + "'";
    }
    throw ArgumentError("seed has characters outside the model alphabet: " + list);
  }
  return out;
}

}  // namespace detail

// Feeds the seed, then draws `length` characters at temperature T, each fed
// back as the next input. Returns only the continuation.
inline std::u32string sample_text(const LstmModel& model, std::u32string_view seed,
                                  std::size_t length, double temperature, std::uint64_t rng_seed,
                                  const SampleObserver& observer = {}) {
  if (length < 1) throw ArgumentError("length must be at least 1");
  if (!(temperature > 0)) throw ArgumentError("temperature must be positive");
  const auto syms = detail::seed_symbols(model, seed);
  Rng rng(rng_seed);
  LstmState state = model.zero_state();
  VectorXd logits;
  for (auto s : syms) logits = model.step(state, s);
  std::u32string out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const VectorXd p = softmax_temperature(logits, temperature);
    const double u = rng.uniform();
    double acc = 0;
    Symbol chosen = static_cast<Symbol>(p.size() - 1);
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      acc += p[j];
      if (u < acc) {
        chosen = static_cast<Symbol>(j);
        break;
      }
    }
    if (observer) observer(p, chosen);
    out.push_back(model.alphabet()[chosen]);
    logits = model.step(state, chosen);
  }
  return out;
}

// Hard decoding: always the most probable next character.
inline std::u32string greedy_text(const LstmModel& model, std::u32string_view seed,
                                  std::size_t length) {
  const auto syms = detail::seed_symbols(model, seed);
  LstmState state = model.zero_state();
  VectorXd logits;
  for (auto s : syms) logits = model.step(state, s);
  std::u32string out;
  for (std::size_t i = 0; i < length; ++i) {
    Eigen::Index best;
    logits.maxCoeff(&best);
    out.push_back(model.alphabet()[static_cast<std::size_t>(best)]);
    logits = model.step(state, static_cast<Symbol>(best));
  }
  return out;
}

}  // namespace lingstat
