// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "scriptnet/errors.hpp"

namespace scriptnet::nn {

using ad::shape_string;

Tensor glorot_uniform(ad::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<Scalar> data(ad::shape_numel(shape));
  for (Scalar& v : data) v = static_cast<Scalar>(rng.uniform(-limit, limit));
  return Tensor(std::move(shape), std::move(data), true);
}

// ---------------------------------------------------------------------------
// Ops

Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& filters, const Tensor& bias, std::size_t stride) {
  if (x.rank() != 2 && x.rank() != 3) throw DimensionError("conv1d: input must be [len,in] or [groups,len,in], got " + shape_string(x.shape()));
  if (filters.rank() != 3) throw DimensionError("conv1d: filters must be [F,W,in], got " + shape_string(filters.shape()));
  if (stride < 1) throw ConfigError("conv1d: stride must be at least 1");
  const bool grouped = x.rank() == 3;
  const std::size_t groups = grouped ? x.dim(0) : 1;
  const std::size_t len = x.dim(grouped ? 1 : 0);
  const std::size_t in = x.dim(grouped ? 2 : 1);
  const std::size_t nf = filters.dim(0), win = filters.dim(1);
  if (filters.dim(2) != in) {
    throw DimensionError("conv1d: filter depth " + std::to_string(filters.dim(2)) + " does not match input " +
                         shape_string(x.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != nf) throw DimensionError("conv1d: bias must be [" + std::to_string(nf) + "]");
  if (len < win) {
    throw DimensionError("conv1d: sequence length " + std::to_string(len) + " shorter than window " +
                         std::to_string(win));
  }
  const std::size_t out_len = (len - win) / stride + 1;
  const std::size_t span_len = win * in;

  auto xv = x.data();
  auto fv = filters.data();
  auto bv = bias.data();
  std::vector<Scalar> y(groups * out_len * nf);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t p = 0; p < out_len; ++p) {
      const Scalar* window = xv.data() + (g * len + p * stride) * in;
      Scalar* out = y.data() + (g * out_len + p) * nf;
      for (std::size_t f = 0; f < nf; ++f) {
        const Scalar* filt = fv.data() + f * span_len;
        Scalar acc = bv[f];
        for (std::size_t i = 0; i < span_len; ++i) acc += filt[i] * window[i];
        out[f] = acc;
      }
    }
  }
  ad::Shape shape = grouped ? ad::Shape{groups, out_len, nf} : ad::Shape{out_len, nf};
  Tensor result(std::move(shape), std::move(y));
  tape.check(result, "conv1d");
  return tape.record(result, {x, filters, bias}, [=](const ad::GradContext& ctx) {
    auto gy = ctx.out_grad();
    auto xv = x.data();
    auto fv = filters.data();
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t p = 0; p < out_len; ++p) {
        const std::size_t base = (g * out_len + p) * nf;
        const std::size_t woff = (g * len + p * stride) * in;
        for (std::size_t f = 0; f < nf; ++f) {
          const Scalar gv = gy[base + f];
          if (gv == 0) continue;
          if (ctx.wants(0)) {
            Scalar* dx = ctx.in_grad(0).data() + woff;
            const Scalar* filt = fv.data() + f * span_len;
            for (std::size_t i = 0; i < span_len; ++i) dx[i] += gv * filt[i];
          }
          if (ctx.wants(1)) {
            Scalar* df = ctx.in_grad(1).data() + f * span_len;
            const Scalar* window = xv.data() + woff;
            for (std::size_t i = 0; i < span_len; ++i) df[i] += gv * window[i];
          }
          if (ctx.wants(2)) ctx.in_grad(2)[f] += gv;
        }
      }
    }
  });
}

Tensor maxpool_time(Tape& tape, const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 3) throw DimensionError("maxpool_time: input must be [M,K] or [G,M,K], got " + shape_string(x.shape()));
  const bool grouped = x.rank() == 3;
  const std::size_t groups = grouped ? x.dim(0) : 1;
  const std::size_t rows = x.dim(grouped ? 1 : 0);
  const std::size_t width = x.dim(grouped ? 2 : 1);
  auto xv = x.data();
  std::vector<Scalar> y(groups * width);
  std::vector<std::uint32_t> arg(groups * width, 0);
  for (std::size_t g = 0; g < groups; ++g) {
    const Scalar* block = xv.data() + g * rows * width;
    Scalar* out = y.data() + g * width;
    std::uint32_t* idx = arg.data() + g * width;
    std::copy_n(block, width, out);
    for (std::size_t m = 1; m < rows; ++m) {
      const Scalar* row = block + m * width;
      for (std::size_t k = 0; k < width; ++k) {
        if (row[k] > out[k]) {
          out[k] = row[k];
          idx[k] = static_cast<std::uint32_t>(m);
        }
      }
    }
  }
  ad::Shape shape = grouped ? ad::Shape{groups, width} : ad::Shape{width};
  Tensor result(std::move(shape), std::move(y));
  tape.check(result, "maxpool_time");
  return tape.record(result, {x}, [groups, rows, width, arg = std::move(arg)](const ad::GradContext& ctx) {
    auto gy = ctx.out_grad();
    auto dx = ctx.in_grad(0);
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t k = 0; k < width; ++k) dx[(g * rows + arg[g * width + k]) * width + k] += gy[g * width + k];
  });
}

Tensor token_conv_table(Tape& tape, const Tensor& embedding_table, const Tensor& filters) {
  if (embedding_table.rank() != 2 || filters.rank() != 3 || filters.dim(2) != embedding_table.dim(1)) {
    throw DimensionError("token_conv_table: incompatible shapes " + shape_string(embedding_table.shape()) + " and " +
                         shape_string(filters.shape()));
  }
  const std::size_t vocab = embedding_table.dim(0), dim = embedding_table.dim(1);
  const std::size_t nf = filters.dim(0), win = filters.dim(1);
  auto ev = embedding_table.data();
  auto fv = filters.data();
  std::vector<Scalar> y(vocab * win * nf);
  for (std::size_t v = 0; v < vocab; ++v) {
    const Scalar* e = ev.data() + v * dim;
    for (std::size_t w = 0; w < win; ++w) {
      for (std::size_t f = 0; f < nf; ++f) {
        const Scalar* filt = fv.data() + (f * win + w) * dim;
        Scalar acc = 0;
        for (std::size_t d = 0; d < dim; ++d) acc += filt[d] * e[d];
        y[(v * win + w) * nf + f] = acc;
      }
    }
  }
  Tensor result({vocab, win, nf}, std::move(y));
  tape.check(result, "token_conv_table");
  return tape.record(result, {embedding_table, filters}, [=](const ad::GradContext& ctx) {
    auto gy = ctx.out_grad();
    auto ev = embedding_table.data();
    auto fv = filters.data();
    for (std::size_t v = 0; v < vocab; ++v) {
      for (std::size_t w = 0; w < win; ++w) {
        for (std::size_t f = 0; f < nf; ++f) {
          const Scalar gv = gy[(v * win + w) * nf + f];
          if (gv == 0) continue;
          const std::size_t foff = (f * win + w) * dim;
          if (ctx.wants(0)) {
            Scalar* de = ctx.in_grad(0).data() + v * dim;
            for (std::size_t d = 0; d < dim; ++d) de[d] += gv * fv[foff + d];
          }
          if (ctx.wants(1)) {
            Scalar* df = ctx.in_grad(1).data() + foff;
            for (std::size_t d = 0; d < dim; ++d) df[d] += gv * ev[v * dim + d];
          }
        }
      }
    }
  });
}

Tensor table_conv1d(Tape& tape, const Tensor& response, const Tensor& bias, std::span<const prep::Token> ids,
                    std::size_t groups, std::size_t group_len, std::size_t stride) {
  if (response.rank() != 3) throw DimensionError("table_conv1d: response must be [V,W,F], got " + shape_string(response.shape()));
  const std::size_t vocab = response.dim(0), win = response.dim(1), nf = response.dim(2);
  if (bias.rank() != 1 || bias.dim(0) != nf) throw DimensionError("table_conv1d: bias must be [" + std::to_string(nf) + "]");
  if (ids.size() != groups * group_len || groups == 0) {
    throw DimensionError("table_conv1d: expected " + std::to_string(groups) + " runs of " +
                         std::to_string(group_len) + " tokens, got " + std::to_string(ids.size()));
  }
  if (stride < 1) throw ConfigError("table_conv1d: stride must be at least 1");
  if (group_len < win) {
    throw DimensionError("table_conv1d: run length " + std::to_string(group_len) + " shorter than window " +
                         std::to_string(win));
  }
  for (prep::Token t : ids) {
    if (t >= vocab) throw IndexError("token id " + std::to_string(t) + " out of range for vocabulary of " + std::to_string(vocab));
  }
  const std::size_t out_len = (group_len - win) / stride + 1;
  auto rv = response.data();
  auto bv = bias.data();
  std::vector<Scalar> y(groups * out_len * nf);
  for (std::size_t g = 0; g < groups; ++g) {
    const prep::Token* run = ids.data() + g * group_len;
    for (std::size_t p = 0; p < out_len; ++p) {
      Scalar* out = y.data() + (g * out_len + p) * nf;
      std::copy_n(bv.data(), nf, out);
      for (std::size_t w = 0; w < win; ++w) {
        const Scalar* r = rv.data() + (run[p * stride + w] * win + w) * nf;
        for (std::size_t f = 0; f < nf; ++f) out[f] += r[f];
      }
    }
  }
  Tensor result({groups, out_len, nf}, std::move(y));
  tape.check(result, "table_conv1d");
  std::vector<prep::Token> kept(ids.begin(), ids.end());
  return tape.record(result, {response, bias}, [=, kept = std::move(kept)](const ad::GradContext& ctx) {
    auto gy = ctx.out_grad();
    for (std::size_t g = 0; g < groups; ++g) {
      const prep::Token* run = kept.data() + g * group_len;
      for (std::size_t p = 0; p < out_len; ++p) {
        const Scalar* gv = gy.data() + (g * out_len + p) * nf;
        if (ctx.wants(0)) {
          for (std::size_t w = 0; w < win; ++w) {
            Scalar* dr = ctx.in_grad(0).data() + (run[p * stride + w] * win + w) * nf;
            for (std::size_t f = 0; f < nf; ++f) dr[f] += gv[f];
          }
        }
        if (ctx.wants(1)) {
          Scalar* db = ctx.in_grad(1).data();
          for (std::size_t f = 0; f < nf; ++f) db[f] += gv[f];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Embedding

EmbeddingLayer EmbeddingLayer::create(std::size_t vocab, std::size_t dim, Rng& rng) {
  return EmbeddingLayer(glorot_uniform({vocab, dim}, vocab, dim, rng));
}

Tensor EmbeddingLayer::forward(Tape& tape, std::span<const prep::Token> ids) const {
  return ad::gather_rows(tape, table_, ids);
}

std::vector<NamedParameter> EmbeddingLayer::parameters(const std::string& prefix) const {
  return {{prefix + ".table", table_}};
}

// ---------------------------------------------------------------------------
// Conv1D

Conv1DLayer::Conv1DLayer(Tensor filters, Tensor bias, std::size_t stride)
    : filters_(std::move(filters)), bias_(std::move(bias)), stride_(stride) {
  if (filters_.rank() != 3) throw DimensionError("conv filters must be [F,W,in]");
  if (stride_ < 1) throw ConfigError("conv stride must be at least 1");
  if (bias_.rank() != 1 || bias_.dim(0) != filters_.dim(0)) throw DimensionError("conv bias length must equal filter count");
}

Conv1DLayer Conv1DLayer::create(std::size_t in_dim, std::size_t filters, std::size_t window, std::size_t stride,
                                Rng& rng) {
  if (in_dim < 1 || filters < 1 || window < 1 || stride < 1) throw ConfigError("conv dimensions must be positive");
  return Conv1DLayer(glorot_uniform({filters, window, in_dim}, window * in_dim, window * filters, rng),
                     Tensor::zeros({filters}, true), stride);
}

Tensor Conv1DLayer::forward(Tape& tape, const Tensor& x) const { return conv1d(tape, x, filters_, bias_, stride_); }

std::size_t Conv1DLayer::out_len(std::size_t len) const {
  if (len < window()) throw DimensionError("sequence length " + std::to_string(len) + " shorter than conv window");
  return (len - window()) / stride_ + 1;
}

std::vector<NamedParameter> Conv1DLayer::parameters(const std::string& prefix) const {
  return {{prefix + ".filters", filters_}, {prefix + ".bias", bias_}};
}

// ---------------------------------------------------------------------------
// Dropout

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
}

Tensor DropoutLayer::forward(Tape& tape, const Tensor& x, bool training, Rng* rng) const {
  if (!training || rate_ == 0.0) return x;
  if (rng == nullptr) throw ContractError("dropout in training mode needs a random generator");
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate_));
  std::vector<Scalar> mask(x.size());
  for (Scalar& m : mask) m = rng->bernoulli(rate_) ? Scalar(0) : keep_scale;
  return ad::mul(tape, x, Tensor(x.shape(), std::move(mask)));
}

// ---------------------------------------------------------------------------
// LSTM

LSTMCell make_lstm_cell(std::size_t in_dim, std::size_t hidden, Rng& rng) {
  if (in_dim < 1 || hidden < 1) throw ConfigError("LSTM dimensions must be positive");
  LSTMCell cell;
  for (std::size_t g = 0; g < 4; ++g) {
    cell.input[g] = glorot_uniform({hidden, in_dim}, in_dim, hidden, rng);
    cell.recurrent[g] = glorot_uniform({hidden, hidden}, hidden, hidden, rng);
    const Scalar b = g == static_cast<std::size_t>(Gate::kForget) ? Scalar(1) : Scalar(0);
    cell.bias[g] = Tensor::filled({hidden}, b, true);
  }
  return cell;
}

Tensor lstm_scan(Tape& tape, const LSTMCell& cell, const Tensor& x, std::size_t steps, std::size_t batch,
                 bool reverse) {
  const std::size_t hid = cell.hidden();
  if (x.rank() != 2 || x.dim(1) != cell.input_dim() || x.dim(0) != steps * batch || steps == 0) {
    throw DimensionError("lstm: input " + shape_string(x.shape()) + " incompatible with " + std::to_string(steps) +
                         " steps of batch " + std::to_string(batch) + " and input dim " +
                         std::to_string(cell.input_dim()));
  }
  std::vector<Tensor> wt, ut, bs;
  for (std::size_t g = 0; g < 4; ++g) {
    wt.push_back(ad::transpose(tape, cell.input[g]));
    ut.push_back(ad::transpose(tape, cell.recurrent[g]));
    bs.push_back(cell.bias[g]);
  }
  const Tensor w_all = ad::concat_cols(tape, wt);  // [in, 4H]
  const Tensor u_all = ad::concat_cols(tape, ut);  // [H, 4H]
  const Tensor b_all = ad::concat_cols(tape, bs);  // [4H]
  const Tensor projected = ad::add(tape, ad::matmul(tape, x, w_all), b_all);

  std::vector<Tensor> outputs(steps);
  Tensor h, c;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    Tensor gates = ad::slice_rows(tape, projected, t * batch, (t + 1) * batch);
    if (h.defined()) gates = ad::add(tape, gates, ad::matmul(tape, h, u_all));
    const Tensor in_gate = ad::sigmoid(tape, ad::slice_cols(tape, gates, 0, hid));
    const Tensor forget_gate = ad::sigmoid(tape, ad::slice_cols(tape, gates, hid, 2 * hid));
    const Tensor out_gate = ad::sigmoid(tape, ad::slice_cols(tape, gates, 2 * hid, 3 * hid));
    const Tensor candidate = ad::tanh(tape, ad::slice_cols(tape, gates, 3 * hid, 4 * hid));
    // h0 = c0 = 0, so the first step has no recurrent or forget term.
    Tensor update = ad::mul(tape, in_gate, candidate);
    c = h.defined() ? ad::add(tape, ad::mul(tape, forget_gate, c), update) : update;
    h = ad::mul(tape, out_gate, ad::tanh(tape, c));
    outputs[t] = h;
  }
  return ad::concat_rows(tape, outputs);
}

LSTMLayer::LSTMLayer(std::vector<std::vector<LSTMCell>> cells) : cells_(std::move(cells)) {
  if (cells_.empty()) throw ConfigError("LSTM needs at least one layer");
  const std::size_t dirs = cells_.front().size();
  if (dirs != 1 && dirs != 2) throw ConfigError("LSTM layer must have one or two directions");
  const std::size_t hid = cells_.front().front().hidden();
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    if (cells_[l].size() != dirs) throw ConfigError("LSTM layers disagree on directionality");
    for (const auto& cell : cells_[l]) {
      if (cell.hidden() != hid) throw ConfigError("LSTM gates and layers must share the hidden size");
      if (l > 0 && cell.input_dim() != hid * dirs) throw DimensionError("stacked LSTM input dim mismatch");
    }
  }
}

LSTMLayer LSTMLayer::create(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, bool bidirectional,
                            Rng& rng) {
  if (num_layers < 1) throw ConfigError("LSTM needs at least one layer");
  std::vector<std::vector<LSTMCell>> cells;
  std::size_t layer_in = in_dim;
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::vector<LSTMCell> dirs;
    dirs.push_back(make_lstm_cell(layer_in, hidden, rng));
    if (bidirectional) dirs.push_back(make_lstm_cell(layer_in, hidden, rng));
    cells.push_back(std::move(dirs));
    layer_in = hidden * (bidirectional ? 2 : 1);
  }
  return LSTMLayer(std::move(cells));
}

Tensor LSTMLayer::forward(Tape& tape, const Tensor& x) const {
  if (x.rank() != 2) throw DimensionError("lstm: input must be [n, in], got " + shape_string(x.shape()));
  return forward_batched(tape, x, x.dim(0), 1, DropoutLayer(0.0), false, nullptr);
}

Tensor LSTMLayer::forward_batched(Tape& tape, const Tensor& x, std::size_t steps, std::size_t batch,
                                  const DropoutLayer& between, bool training, Rng* rng) const {
  Tensor cur = x;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    if (l > 0) cur = between.forward(tape, cur, training, rng);
    Tensor fwd = lstm_scan(tape, cells_[l][0], cur, steps, batch, false);
    if (cells_[l].size() == 2) {
      Tensor bwd = lstm_scan(tape, cells_[l][1], cur, steps, batch, true);
      cur = ad::concat_cols(tape, {fwd, bwd});
    } else {
      cur = fwd;
    }
  }
  return cur;
}

std::vector<NamedParameter> LSTMLayer::parameters(const std::string& prefix) const {
  static constexpr const char* kGateNames[4] = {"i", "f", "o", "c"};
  std::vector<NamedParameter> out;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    for (std::size_t d = 0; d < cells_[l].size(); ++d) {
      const std::string base = prefix + ".l" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      const LSTMCell& cell = cells_[l][d];
      for (std::size_t g = 0; g < 4; ++g) {
        out.push_back({base + ".input_" + kGateNames[g], cell.input[g]});
        out.push_back({base + ".recurrent_" + kGateNames[g], cell.recurrent[g]});
        out.push_back({base + ".bias_" + kGateNames[g], cell.bias[g]});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense

DenseLayer::DenseLayer(Tensor weights, Tensor bias, Activation activation)
    : weights_(std::move(weights)), bias_(std::move(bias)), activation_(activation) {
  if (weights_.rank() != 2) throw DimensionError("dense weights must be [out, in]");
  if (bias_.rank() != 1 || bias_.dim(0) != weights_.dim(0)) throw DimensionError("dense bias length must equal output size");
}

DenseLayer DenseLayer::create(std::size_t in_dim, std::size_t out_dim, Activation activation, Rng& rng) {
  if (in_dim < 1 || out_dim < 1) throw ConfigError("dense dimensions must be positive");
  return DenseLayer(glorot_uniform({out_dim, in_dim}, in_dim, out_dim, rng), Tensor::zeros({out_dim}, true),
                    activation);
}

Tensor DenseLayer::forward(Tape& tape, const Tensor& x) const {
  const std::size_t in = weights_.dim(1), out = weights_.dim(0);
  const bool flat = x.rank() == 1;
  if ((flat && x.dim(0) != in) || (!flat && (x.rank() != 2 || x.dim(1) != in))) {
    throw DimensionError("dense: input " + shape_string(x.shape()) + " does not match weights " +
                         shape_string(weights_.shape()));
  }
  Tensor rows = flat ? ad::reshape(tape, x, {1, in}) : x;
  Tensor y = ad::add(tape, ad::matmul(tape, rows, ad::transpose(tape, weights_)), bias_);
  switch (activation_) {
    case Activation::kNone: break;
    case Activation::kRelu: y = ad::relu(tape, y); break;
    case Activation::kSigmoid: y = ad::sigmoid(tape, y); break;
  }
  return flat ? ad::reshape(tape, y, {out}) : y;
}

std::vector<NamedParameter> DenseLayer::parameters(const std::string& prefix) const {
  return {{prefix + ".weight", weights_}, {prefix + ".bias", bias_}};
}

}  // namespace scriptnet::nn
