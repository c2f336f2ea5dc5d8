// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "scriptnet/dataset.hpp"
#include "scriptnet/models.hpp"
#include "scriptnet/optimizer.hpp"

namespace scriptnet::train {

struct TrainConfig {
  std::size_t max_epochs = 15;
  std::size_t minibatch_size = 50;
  // Epochs without validation improvement before stopping; 0 disables.
  std::size_t patience = 3;
  std::uint64_t seed = 1;
  AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_error = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 before any epoch finished
  bool stopped_early = false;

  // One JSON object per epoch, newline separated.
  std::string to_jsonl() const;
};

struct ValidationResult {
  double loss = 0.0;
  double error_rate = 0.0;
};

using Validator = std::function<ValidationResult(const models::SequenceClassifier&)>;
using EpochObserver = std::function<void(const EpochRecord&)>;

// Tracks the best validation loss; a strictly lower loss is an improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `loss` is the new best.
  bool observe(double loss);
  bool should_stop() const { return patience_ > 0 && stale_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

// Mean BCE and error rate at threshold 0.5, each file scored on its own.
ValidationResult evaluate_loss(const models::SequenceClassifier& model, const Dataset& data);

// Minibatch Adam on mean BCE with per-epoch shuffling from `config.seed`.
// Leaves the model holding the parameters of the best validation epoch.
// Throws DataError on empty splits and NumericError on a non-finite loss.
TrainReport fit(models::SequenceClassifier& model, const Dataset& train, const Dataset& validation,
                const TrainConfig& config, const Validator& validator = {}, const EpochObserver& observer = {});

}  // namespace scriptnet::train
