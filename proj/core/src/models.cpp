// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/models.hpp"

#include <algorithm>
#include <set>

#include "scriptnet/errors.hpp"

namespace scriptnet::models {

namespace {

void reject_unknown(const ConfigMap& map, const std::set<std::string>& known, const char* model) {
  for (const auto& [key, value] : map) {
    if (!known.count(key)) throw ConfigError(std::string("unknown ") + model + " setting '" + key + "'");
  }
}

void require_positive(std::size_t value, const char* name) {
  if (value < 1) throw ConfigError(std::string(name) + " must be positive");
}

void require_dropout(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

std::size_t lstm_parameter_count(std::size_t in, std::size_t hidden, std::size_t layers, bool bidirectional) {
  const std::size_t dirs = bidirectional ? 2 : 1;
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t layer_in = l == 0 ? in : hidden * dirs;
    total += dirs * 4 * (hidden * layer_in + hidden * hidden + hidden);
  }
  return total;
}

std::size_t head_parameter_count(std::size_t in, std::size_t width, std::size_t count) {
  std::size_t total = 0;
  std::size_t cur = in;
  for (std::size_t i = 0; i < count; ++i) {
    total += cur * width + width;
    cur = width;
  }
  return total + cur + 1;
}

// Maximum over time of a time-major [steps*batch, K] sequence -> [batch, K].
Tensor pool_over_steps(Tape& tape, const Tensor& seq, std::size_t steps, std::size_t batch) {
  const std::size_t width = seq.dim(1);
  Tensor pooled = nn::maxpool_time(tape, ad::reshape(tape, seq, {steps, batch * width}));
  return ad::reshape(tape, pooled, {batch, width});
}

}  // namespace

// ---------------------------------------------------------------------------
// SequenceClassifier

prep::ChunkedBatch SequenceClassifier::make_batch(std::span<const std::span<const std::uint8_t>> files) const {
  std::vector<prep::TokenSequence> seqs;
  seqs.reserve(files.size());
  for (auto f : files) seqs.push_back(prep::encode_bytes(f.first(std::min(f.size(), max_length()))));
  for (std::size_t i = 0; i < files.size(); ++i) seqs[i].original_length = files[i].size();
  return prep::chunk_and_batch(seqs, chunk_len(), max_length());
}

std::vector<double> SequenceClassifier::predict(const prep::ChunkedBatch& batch) const {
  Tape tape(false);
  Tensor probs = forward(tape, batch, false, nullptr);
  return std::vector<double>(probs.data().begin(), probs.data().end());
}

double SequenceClassifier::score_bytes(std::span<const std::uint8_t> window) const {
  const std::span<const std::uint8_t> files[1] = {window};
  return predict(make_batch(files)).front();
}

// ---------------------------------------------------------------------------
// ClassifierHead

ClassifierHead::ClassifierHead(double dropout, std::vector<nn::DenseLayer> hidden, nn::DenseLayer output)
    : dropout_(dropout), hidden_(std::move(hidden)), output_(std::move(output)) {
  if (output_.weights().dim(0) != 1) throw DimensionError("classifier output layer must have one unit");
}

ClassifierHead ClassifierHead::create(std::size_t in_dim, std::size_t width, std::size_t count, double dropout,
                                      Rng& rng) {
  std::vector<nn::DenseLayer> hidden;
  std::size_t cur = in_dim;
  for (std::size_t i = 0; i < count; ++i) {
    hidden.push_back(nn::DenseLayer::create(cur, width, nn::Activation::kRelu, rng));
    cur = width;
  }
  return ClassifierHead(dropout, std::move(hidden), nn::DenseLayer::create(cur, 1, nn::Activation::kSigmoid, rng));
}

Tensor ClassifierHead::forward(Tape& tape, const Tensor& x, bool training, Rng* rng) const {
  Tensor h = dropout_.forward(tape, x, training, rng);
  for (const auto& layer : hidden_) h = layer.forward(tape, h);
  Tensor p = output_.forward(tape, h);
  return ad::reshape(tape, p, {p.dim(0)});
}

std::vector<NamedParameter> ClassifierHead::parameters(const std::string& prefix) const {
  std::vector<NamedParameter> out;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    auto p = hidden_[i].parameters(prefix + ".hidden" + std::to_string(i));
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = output_.parameters(prefix + ".output");
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

// ---------------------------------------------------------------------------
// CPoLS

void CPoLSConfig::validate() const {
  require_positive(max_length, "max_sequence_length");
  require_positive(chunk_len, "chunk_len");
  require_positive(embedding_dim, "embedding_dim");
  require_positive(cnn_window, "cnn_window");
  require_positive(cnn_stride, "cnn_stride");
  require_positive(cnn_filters, "cnn_filters");
  require_positive(lstm_hidden, "lstm_hidden");
  require_positive(lstm_layers, "lstm_layers");
  require_dropout(dropout);
  if (chunk_len < cnn_window) {
    throw ConfigError("chunk_len (" + std::to_string(chunk_len) + ") must be at least cnn_window (" +
                      std::to_string(cnn_window) + ")");
  }
}

ConfigMap CPoLSConfig::to_map() const {
  return {{"max_sequence_length", std::to_string(max_length)},
          {"chunk_len", std::to_string(chunk_len)},
          {"embedding_dim", std::to_string(embedding_dim)},
          {"cnn_window", std::to_string(cnn_window)},
          {"cnn_stride", std::to_string(cnn_stride)},
          {"cnn_filters", std::to_string(cnn_filters)},
          {"lstm_hidden", std::to_string(lstm_hidden)},
          {"lstm_layers", std::to_string(lstm_layers)},
          {"bidirectional", bidirectional ? "true" : "false"},
          {"classifier_hidden", std::to_string(classifier_hidden)},
          {"dropout", format_double(dropout)}};
}

CPoLSConfig CPoLSConfig::from_map(const ConfigMap& map) {
  CPoLSConfig c;
  std::set<std::string> known;
  for (const auto& [k, v] : c.to_map()) known.insert(k);
  reject_unknown(map, known, "cpols");
  read_key(map, "max_sequence_length", c.max_length);
  read_key(map, "chunk_len", c.chunk_len);
  read_key(map, "embedding_dim", c.embedding_dim);
  read_key(map, "cnn_window", c.cnn_window);
  read_key(map, "cnn_stride", c.cnn_stride);
  read_key(map, "cnn_filters", c.cnn_filters);
  read_key(map, "lstm_hidden", c.lstm_hidden);
  read_key(map, "lstm_layers", c.lstm_layers);
  read_key(map, "bidirectional", c.bidirectional);
  read_key(map, "classifier_hidden", c.classifier_hidden);
  read_key(map, "dropout", c.dropout);
  c.validate();
  return c;
}

std::size_t CPoLSConfig::parameter_count() const {
  const std::size_t out_dim = lstm_hidden * (bidirectional ? 2 : 1);
  return prep::kVocabSize * embedding_dim + cnn_filters * cnn_window * embedding_dim + cnn_filters +
         lstm_parameter_count(cnn_filters, lstm_hidden, lstm_layers, bidirectional) +
         head_parameter_count(out_dim, lstm_hidden, classifier_hidden);
}

CPoLSModel::CPoLSModel(const CPoLSConfig& config, std::uint64_t init_seed)
    : config_(config), lstm_dropout_(config.dropout) {
  config_.validate();
  Rng rng(init_seed);
  embedding_ = nn::EmbeddingLayer::create(prep::kVocabSize, config_.embedding_dim, rng);
  conv_ = nn::Conv1DLayer::create(config_.embedding_dim, config_.cnn_filters, config_.cnn_window, config_.cnn_stride,
                                  rng);
  lstm_ = nn::LSTMLayer::create(config_.cnn_filters, config_.lstm_hidden, config_.lstm_layers, config_.bidirectional,
                                rng);
  head_ = ClassifierHead::create(lstm_.output_dim(), config_.lstm_hidden, config_.classifier_hidden, config_.dropout,
                                 rng);
}

CPoLSModel::Trace CPoLSModel::trace(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const {
  if (batch.chunk_len != config_.chunk_len) {
    throw ContractError("batch chunk length " + std::to_string(batch.chunk_len) + " does not match model chunk_len " +
                        std::to_string(config_.chunk_len));
  }
  if (batch.batch == 0 || batch.num_chunks == 0) throw ContractError("empty batch");
  const std::size_t items = batch.batch, steps = batch.num_chunks, len = batch.chunk_len;

  // Time-major chunk order: group t*items + b holds chunk t of item b.
  std::vector<prep::Token> ids;
  ids.reserve(items * steps * len);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < items; ++b) {
      auto c = batch.chunk(b, t);
      ids.insert(ids.end(), c.begin(), c.end());
    }
  }

  Trace out;
  out.steps = steps;
  // Embedding followed by the shared convolution, evaluated through the
  // per-token response table.
  Tensor response = nn::token_conv_table(tape, embedding_.table(), conv_.filters());
  out.conv = nn::table_conv1d(tape, response, conv_.bias(), ids, steps * items, len, conv_.stride());
  out.chunk_vectors = nn::maxpool_time(tape, out.conv);
  out.lstm = lstm_.forward_batched(tape, out.chunk_vectors, steps, items, lstm_dropout_, training, rng);
  out.representation = pool_over_steps(tape, out.lstm, steps, items);
  out.probabilities = head_.forward(tape, out.representation, training, rng);
  return out;
}

Tensor CPoLSModel::forward(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const {
  return trace(tape, batch, training, rng).probabilities;
}

std::vector<NamedParameter> CPoLSModel::parameters() const {
  std::vector<NamedParameter> out = embedding_.parameters("embedding");
  for (auto& p : conv_.parameters("conv")) out.push_back(std::move(p));
  for (auto& p : lstm_.parameters("lstm")) out.push_back(std::move(p));
  for (auto& p : head_.parameters("classifier")) out.push_back(std::move(p));
  return out;
}

// ---------------------------------------------------------------------------
// LaMP

void LaMPConfig::validate() const {
  require_positive(max_length, "max_sequence_length");
  require_positive(embedding_dim, "embedding_dim");
  require_positive(lstm_hidden, "lstm_hidden");
  require_positive(lstm_layers, "lstm_layers");
  require_dropout(dropout);
}

ConfigMap LaMPConfig::to_map() const {
  return {{"max_sequence_length", std::to_string(max_length)},
          {"embedding_dim", std::to_string(embedding_dim)},
          {"lstm_hidden", std::to_string(lstm_hidden)},
          {"lstm_layers", std::to_string(lstm_layers)},
          {"bidirectional", bidirectional ? "true" : "false"},
          {"classifier_hidden", std::to_string(classifier_hidden)},
          {"dropout", format_double(dropout)}};
}

LaMPConfig LaMPConfig::from_map(const ConfigMap& map) {
  LaMPConfig c;
  std::set<std::string> known;
  for (const auto& [k, v] : c.to_map()) known.insert(k);
  reject_unknown(map, known, "lamp");
  read_key(map, "max_sequence_length", c.max_length);
  read_key(map, "embedding_dim", c.embedding_dim);
  read_key(map, "lstm_hidden", c.lstm_hidden);
  read_key(map, "lstm_layers", c.lstm_layers);
  read_key(map, "bidirectional", c.bidirectional);
  read_key(map, "classifier_hidden", c.classifier_hidden);
  read_key(map, "dropout", c.dropout);
  c.validate();
  return c;
}

std::size_t LaMPConfig::parameter_count() const {
  const std::size_t out_dim = lstm_hidden * (bidirectional ? 2 : 1);
  return prep::kVocabSize * embedding_dim + lstm_parameter_count(embedding_dim, lstm_hidden, lstm_layers, bidirectional) +
         head_parameter_count(out_dim, lstm_hidden, classifier_hidden);
}

LaMPModel::LaMPModel(const LaMPConfig& config, std::uint64_t init_seed)
    : config_(config), lstm_dropout_(config.dropout) {
  config_.validate();
  Rng rng(init_seed);
  embedding_ = nn::EmbeddingLayer::create(prep::kVocabSize, config_.embedding_dim, rng);
  lstm_ = nn::LSTMLayer::create(config_.embedding_dim, config_.lstm_hidden, config_.lstm_layers, config_.bidirectional,
                                rng);
  head_ = ClassifierHead::create(lstm_.output_dim(), config_.lstm_hidden, config_.classifier_hidden, config_.dropout,
                                 rng);
}

Tensor LaMPModel::forward(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const {
  if (batch.chunk_len != config_.max_length || batch.num_chunks != 1) {
    throw ContractError("LaMP expects one chunk of " + std::to_string(config_.max_length) + " tokens per item");
  }
  const std::size_t items = batch.batch, steps = batch.chunk_len;
  std::vector<prep::Token> ids(steps * items);
  for (std::size_t b = 0; b < items; ++b) {
    auto row = batch.chunk(b, 0);
    for (std::size_t t = 0; t < steps; ++t) ids[t * items + b] = row[t];
  }
  Tensor embedded = embedding_.forward(tape, ids);
  Tensor seq = lstm_.forward_batched(tape, embedded, steps, items, lstm_dropout_, training, rng);
  return head_.forward(tape, pool_over_steps(tape, seq, steps, items), training, rng);
}

std::vector<NamedParameter> LaMPModel::parameters() const {
  std::vector<NamedParameter> out = embedding_.parameters("embedding");
  for (auto& p : lstm_.parameters("lstm")) out.push_back(std::move(p));
  for (auto& p : head_.parameters("classifier")) out.push_back(std::move(p));
  return out;
}

// ---------------------------------------------------------------------------
// File scoring

WindowPolicy parse_window_policy(const std::string& name) {
  if (name == "first_window" || name == "first-window") return WindowPolicy::kFirstWindow;
  if (name == "max_over_windows" || name == "max-over-windows") return WindowPolicy::kMaxOverWindows;
  throw ConfigError("unknown window policy '" + name + "' (expected first_window or max_over_windows)");
}

std::string window_policy_name(WindowPolicy policy) {
  return policy == WindowPolicy::kFirstWindow ? "first_window" : "max_over_windows";
}

double predict_file(const Model& model, std::span<const std::uint8_t> raw, WindowPolicy policy) {
  const std::size_t window = model.window_length();
  if (window == 0 || raw.size() <= window) return model.score_bytes(raw);
  if (policy == WindowPolicy::kFirstWindow) return model.score_bytes(raw.first(window));
  double best = 0.0;
  for (std::size_t offset = 0; offset < raw.size(); offset += window) {
    const std::size_t n = std::min(window, raw.size() - offset);
    best = std::max(best, model.score_bytes(raw.subspan(offset, n)));
  }
  return best;
}

std::size_t count_parameters(const Model& model) {
  std::size_t total = 0;
  for (const auto& p : model.parameters()) total += p.tensor.size();
  return total;
}

}  // namespace scriptnet::models
