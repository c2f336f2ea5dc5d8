// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Trainable file classifiers producing a maliciousness probability.
//
// CPoLS ("convoluted partitioning of long sequences"):
//   bytes -> chunks of R tokens -> embedding -> one shared Conv1D per chunk
//   -> temporal max pool per chunk -> LSTM over chunk vectors
//   -> temporal max pool -> classifier.
// LaMP: bytes -> embedding -> LSTM over tokens -> temporal max pool -> classifier.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scriptnet/autodiff.hpp"
#include "scriptnet/config_map.hpp"
#include "scriptnet/layers.hpp"
#include "scriptnet/preprocessing.hpp"
#include "scriptnet/random.hpp"

namespace scriptnet::models {

using ad::Tape;
using ad::Tensor;
using nn::NamedParameter;

class Model {
 public:
  virtual ~Model() = default;

  // One of "cpols", "lamp", "trigram-lr", "trigram-nb".
  virtual std::string kind() const = 0;
  virtual std::vector<NamedParameter> parameters() const = 0;
  virtual ConfigMap config() const = 0;

  // Probability that `window` is malicious. Bytes beyond window_length() are
  // ignored.
  virtual double score_bytes(std::span<const std::uint8_t> window) const = 0;
  // Bytes consumed per scoring window; 0 means the whole input.
  virtual std::size_t window_length() const = 0;

  // Hook for models that cache values derived from their parameters.
  virtual void parameters_updated() {}
};

// Neural models trained through the autodiff tape.
class SequenceClassifier : public Model {
 public:
  virtual std::size_t chunk_len() const = 0;
  virtual std::size_t max_length() const = 0;

  // Probabilities [batch]. `rng` is only consumed when training.
  virtual Tensor forward(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const = 0;

  prep::ChunkedBatch make_batch(std::span<const std::span<const std::uint8_t>> files) const;
  // Inference without recording.
  std::vector<double> predict(const prep::ChunkedBatch& batch) const;

  double score_bytes(std::span<const std::uint8_t> window) const override;
  std::size_t window_length() const override { return max_length(); }
};

// Dropout on the pooled representation, `count` ReLU layers of width `width`,
// then a single sigmoid unit.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(double dropout, std::vector<nn::DenseLayer> hidden, nn::DenseLayer output);
  static ClassifierHead create(std::size_t in_dim, std::size_t width, std::size_t count, double dropout, Rng& rng);

  // [B, in] -> probabilities [B]
  Tensor forward(Tape& tape, const Tensor& x, bool training, Rng* rng) const;

  const std::vector<nn::DenseLayer>& hidden() const { return hidden_; }
  const nn::DenseLayer& output() const { return output_; }
  std::vector<NamedParameter> parameters(const std::string& prefix) const;

 private:
  nn::DropoutLayer dropout_;
  std::vector<nn::DenseLayer> hidden_;
  nn::DenseLayer output_;
};

struct CPoLSConfig {
  std::size_t max_length = 60000;
  std::size_t chunk_len = 200;
  std::size_t embedding_dim = 100;
  std::size_t cnn_window = 10;
  std::size_t cnn_stride = 5;
  std::size_t cnn_filters = 100;
  std::size_t lstm_hidden = 250;
  std::size_t lstm_layers = 1;
  bool bidirectional = false;
  std::size_t classifier_hidden = 1;
  double dropout = 0.5;

  void validate() const;
  ConfigMap to_map() const;
  // Starts from defaults; keys absent from `map` keep them. Unknown keys are
  // rejected.
  static CPoLSConfig from_map(const ConfigMap& map);
  // Exact number of scalar parameters.
  std::size_t parameter_count() const;
};

class CPoLSModel : public SequenceClassifier {
 public:
  CPoLSModel(const CPoLSConfig& config, std::uint64_t init_seed);

  // Intermediate results of one forward pass.
  struct Trace {
    std::size_t steps = 0;  // chunks per item
    Tensor conv;            // [steps*batch, out_len, F], time-major groups
    Tensor chunk_vectors;   // [steps*batch, F]
    Tensor lstm;            // [steps*batch, H or 2H]
    Tensor representation;  // [batch, H or 2H]
    Tensor probabilities;   // [batch]
  };
  Trace trace(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const;

  Tensor forward(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const override;

  std::string kind() const override { return "cpols"; }
  std::vector<NamedParameter> parameters() const override;
  ConfigMap config() const override { return config_.to_map(); }
  std::size_t chunk_len() const override { return config_.chunk_len; }
  std::size_t max_length() const override { return config_.max_length; }

  const CPoLSConfig& settings() const { return config_; }
  const nn::EmbeddingLayer& embedding() const { return embedding_; }
  const nn::Conv1DLayer& conv() const { return conv_; }
  const nn::LSTMLayer& lstm() const { return lstm_; }
  const ClassifierHead& head() const { return head_; }

 private:
  CPoLSConfig config_;
  nn::EmbeddingLayer embedding_;
  nn::Conv1DLayer conv_;
  nn::LSTMLayer lstm_;
  nn::DropoutLayer lstm_dropout_;
  ClassifierHead head_;
};

struct LaMPConfig {
  std::size_t max_length = 200;
  std::size_t embedding_dim = 50;
  std::size_t lstm_hidden = 1500;
  std::size_t lstm_layers = 1;
  bool bidirectional = false;
  std::size_t classifier_hidden = 1;
  double dropout = 0.5;

  void validate() const;
  ConfigMap to_map() const;
  static LaMPConfig from_map(const ConfigMap& map);
  std::size_t parameter_count() const;
};

class LaMPModel : public SequenceClassifier {
 public:
  LaMPModel(const LaMPConfig& config, std::uint64_t init_seed);

  Tensor forward(Tape& tape, const prep::ChunkedBatch& batch, bool training, Rng* rng) const override;

  std::string kind() const override { return "lamp"; }
  std::vector<NamedParameter> parameters() const override;
  ConfigMap config() const override { return config_.to_map(); }
  // The whole truncated sequence is a single chunk.
  std::size_t chunk_len() const override { return config_.max_length; }
  std::size_t max_length() const override { return config_.max_length; }

  const LaMPConfig& settings() const { return config_; }
  const nn::EmbeddingLayer& embedding() const { return embedding_; }
  const nn::LSTMLayer& lstm() const { return lstm_; }
  const ClassifierHead& head() const { return head_; }

 private:
  LaMPConfig config_;
  nn::EmbeddingLayer embedding_;
  nn::LSTMLayer lstm_;
  nn::DropoutLayer lstm_dropout_;
  ClassifierHead head_;
};

enum class WindowPolicy { kFirstWindow, kMaxOverWindows };

WindowPolicy parse_window_policy(const std::string& name);
std::string window_policy_name(WindowPolicy policy);

// Scores a whole file: either its first window, or the maximum over
// consecutive non-overlapping windows of window_length() bytes.
double predict_file(const Model& model, std::span<const std::uint8_t> raw, WindowPolicy policy);

// Builds an untrained model of the given kind. Unknown kinds raise
// ConfigError.
std::unique_ptr<Model> make_model(const std::string& kind, const ConfigMap& config, std::uint64_t init_seed);

std::size_t count_parameters(const Model& model);

}  // namespace scriptnet::models
