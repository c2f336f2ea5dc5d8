// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Neural building blocks: embedding lookup, valid 1-D convolution, temporal
// max pooling, (stacked, optionally bidirectional) LSTM, dense, dropout.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scriptnet/autodiff.hpp"
#include "scriptnet/preprocessing.hpp"
#include "scriptnet/random.hpp"

namespace scriptnet::nn {

using ad::Tape;
using ad::Tensor;

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(ad::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// ---------------------------------------------------------------------------
// Ops

// Valid convolution. x is [len, in] or [groups, len, in]; filters [F, W, in];
// bias [F]. Output [out_len, F] or [groups, out_len, F] with
// out_len = (len - W) / stride + 1.
Tensor conv1d(Tape& tape, const Tensor& x, const Tensor& filters, const Tensor& bias, std::size_t stride);

// Per-dimension maximum over time. [M, K] -> [K]; [G, M, K] -> [G, K].
// Gradient goes to the first row attaining the maximum.
Tensor maxpool_time(Tape& tape, const Tensor& x);

// Response of every (token, window offset, filter) triple:
// out[v, w, f] = sum_d table[v, d] * filters[f, w, d]. Shape [V, W, F].
Tensor token_conv_table(Tape& tape, const Tensor& embedding_table, const Tensor& filters);

// Convolution over embedded tokens using a precomputed token_conv_table.
// ids hold `groups` runs of `group_len` tokens; output [groups, out_len, F].
// Equal to conv1d(gather_rows(table, ids)) up to summation order.
Tensor table_conv1d(Tape& tape, const Tensor& response, const Tensor& bias, std::span<const prep::Token> ids,
                    std::size_t groups, std::size_t group_len, std::size_t stride);

// ---------------------------------------------------------------------------
// Layers

class EmbeddingLayer {
 public:
  EmbeddingLayer() = default;
  explicit EmbeddingLayer(Tensor table) : table_(std::move(table)) {}
  static EmbeddingLayer create(std::size_t vocab, std::size_t dim, Rng& rng);

  // -> [ids.size(), dim]
  Tensor forward(Tape& tape, std::span<const prep::Token> ids) const;

  const Tensor& table() const { return table_; }
  std::size_t dim() const { return table_.dim(1); }
  std::vector<NamedParameter> parameters(const std::string& prefix) const;

 private:
  Tensor table_;
};

class Conv1DLayer {
 public:
  Conv1DLayer() = default;
  Conv1DLayer(Tensor filters, Tensor bias, std::size_t stride);
  static Conv1DLayer create(std::size_t in_dim, std::size_t filters, std::size_t window, std::size_t stride,
                            Rng& rng);

  Tensor forward(Tape& tape, const Tensor& x) const;
  std::size_t out_len(std::size_t len) const;

  const Tensor& filters() const { return filters_; }
  const Tensor& bias() const { return bias_; }
  std::size_t num_filters() const { return filters_.dim(0); }
  std::size_t window() const { return filters_.dim(1); }
  std::size_t stride() const { return stride_; }
  std::vector<NamedParameter> parameters(const std::string& prefix) const;

 private:
  Tensor filters_;
  Tensor bias_;
  std::size_t stride_ = 1;
};

class DropoutLayer {
 public:
  explicit DropoutLayer(double rate = 0.0);

  // Inverted dropout when training; identity (same tensor) otherwise.
  Tensor forward(Tape& tape, const Tensor& x, bool training, Rng* rng) const;
  double rate() const { return rate_; }

 private:
  double rate_;
};

enum class Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };

// One direction of one LSTM layer; arrays are indexed by Gate.
struct LSTMCell {
  std::array<Tensor, 4> input;      // [H, in]
  std::array<Tensor, 4> recurrent;  // [H, H]
  std::array<Tensor, 4> bias;       // [H]

  std::size_t hidden() const { return bias[0].dim(0); }
  std::size_t input_dim() const { return input[0].dim(1); }
};

LSTMCell make_lstm_cell(std::size_t in_dim, std::size_t hidden, Rng& rng);

// Runs one cell over x [steps*batch, in] whose rows are time-major
// (row t*batch + b). Returns hidden states aligned with the input rows. With
// reverse=true the recurrence starts at the last step.
Tensor lstm_scan(Tape& tape, const LSTMCell& cell, const Tensor& x, std::size_t steps, std::size_t batch,
                 bool reverse);

class LSTMLayer {
 public:
  LSTMLayer() = default;
  // cells[layer] holds one cell, or two (forward, backward) when bidirectional.
  explicit LSTMLayer(std::vector<std::vector<LSTMCell>> cells);
  static LSTMLayer create(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, bool bidirectional,
                          Rng& rng);

  // x [n, in] -> [n, H] (or [n, 2H]).
  Tensor forward(Tape& tape, const Tensor& x) const;

  // Time-major batched form. `between` is applied to the output of every
  // layer except the last.
  Tensor forward_batched(Tape& tape, const Tensor& x, std::size_t steps, std::size_t batch,
                         const DropoutLayer& between, bool training, Rng* rng) const;

  std::size_t hidden() const { return cells_.front().front().hidden(); }
  std::size_t output_dim() const { return hidden() * (bidirectional() ? 2 : 1); }
  std::size_t num_layers() const { return cells_.size(); }
  bool bidirectional() const { return cells_.front().size() == 2; }
  const LSTMCell& cell(std::size_t layer, std::size_t direction) const { return cells_[layer][direction]; }
  std::vector<NamedParameter> parameters(const std::string& prefix) const;

 private:
  std::vector<std::vector<LSTMCell>> cells_;
};

enum class Activation { kNone, kRelu, kSigmoid };

class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(Tensor weights, Tensor bias, Activation activation);
  static DenseLayer create(std::size_t in_dim, std::size_t out_dim, Activation activation, Rng& rng);

  // x [in] -> [out], or [B, in] -> [B, out].
  Tensor forward(Tape& tape, const Tensor& x) const;

  const Tensor& weights() const { return weights_; }
  const Tensor& bias() const { return bias_; }
  Activation activation() const { return activation_; }
  std::vector<NamedParameter> parameters(const std::string& prefix) const;

 private:
  Tensor weights_;
  Tensor bias_;
  Activation activation_ = Activation::kNone;
};

}  // namespace scriptnet::nn
