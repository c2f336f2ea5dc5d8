// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Byte-trigram baselines: binary presence of hashed trigrams fed to logistic
// regression or Bernoulli naive Bayes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "scriptnet/dataset.hpp"
#include "scriptnet/models.hpp"
#include "scriptnet/optimizer.hpp"

namespace scriptnet::models {

inline constexpr std::size_t kTrigramFeatures = std::size_t{1} << 20;

// 32-bit FNV-1a.
std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes);

// Sorted, deduplicated feature indices fnv1a32(b0 b1 b2) mod 2^20 of every
// consecutive byte triple. Inputs shorter than 3 bytes have no features.
std::vector<std::uint32_t> trigram_featurize(std::span<const std::uint8_t> raw);

enum class TrigramMode { kLogisticRegression, kNaiveBayes };

struct TrigramOptions {
  // Logistic regression only.
  std::size_t epochs = 15;
  std::size_t minibatch_size = 50;
  train::AdamConfig adam;
  std::uint64_t seed = 1;
  // Naive Bayes Laplace smoothing.
  double alpha = 1.0;
  // Fit a Platt sigmoid to the naive Bayes log-odds. When false the model
  // returns the plain posterior, which saturates at 0 or 1 for long inputs.
  bool calibrate = true;
};

class TrigramModel : public Model {
 public:
  explicit TrigramModel(TrigramMode mode, double alpha = 1.0);

  std::string kind() const override;
  std::vector<NamedParameter> parameters() const override;
  ConfigMap config() const override;
  double score_bytes(std::span<const std::uint8_t> window) const override;
  std::size_t window_length() const override { return 0; }
  void parameters_updated() override;

  TrigramMode mode() const { return mode_; }
  double predict_features(std::span<const std::uint32_t> features) const;
  // Naive Bayes log-odds before calibration.
  double log_odds(std::span<const std::uint32_t> features) const;

  // Logistic regression state.
  const Tensor& weights() const { return weights_; }
  const Tensor& bias() const { return bias_; }

 private:
  friend TrigramModel trigram_train(const Dataset& corpus, TrigramMode mode, const TrigramOptions& options);

  void fit_logistic(const std::vector<std::vector<std::uint32_t>>& docs, const std::vector<int>& labels,
                    const TrigramOptions& options);
  void fit_bayes(const std::vector<std::vector<std::uint32_t>>& docs, const std::vector<int>& labels,
                 bool calibrate);

  TrigramMode mode_;
  double alpha_;
  Tensor weights_;         // [2^20]
  Tensor bias_;            // [1]
  Tensor feature_counts_;  // [2, 2^20] documents per class containing each feature
  Tensor class_counts_;    // [2]
  Tensor calibration_;     // [2] scale and offset applied to the log-odds

  // Naive Bayes log-odds = base_ + sum of present_[f] over present features.
  double base_ = 0.0;
  std::vector<double> present_;
};

// LR: Adam on mean BCE. NB: Laplace-smoothed Bernoulli model, optionally
// calibrated by a Platt sigmoid fitted on the training documents; a corpus
// lacking either class raises DataError.
TrigramModel trigram_train(const Dataset& corpus, TrigramMode mode, const TrigramOptions& options = {});

double trigram_predict(const TrigramModel& model, std::span<const std::uint8_t> raw);

}  // namespace scriptnet::models
