// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "scriptnet/errors.hpp"

namespace scriptnet::train {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be positive");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be positive");
  if (!(adam.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
}

std::string TrainReport::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["validation_loss"] = e.validation_loss;
    j["validation_error"] = e.validation_error;
    j["seconds"] = e.seconds;
    j["best"] = e.epoch == best_epoch;
    out += j.dump();
    out += '\n';
  }
  return out;
}

bool EarlyStopping::observe(double loss) {
  if (loss < best_) {
    best_ = loss;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

ValidationResult evaluate_loss(const models::SequenceClassifier& model, const Dataset& data) {
  if (data.empty()) throw DataError("validation split is empty");
  double loss = 0.0;
  std::size_t errors = 0;
  for (const auto& s : data) {
    const double p = model.score_bytes(s.bytes);
    loss += bce_value(p, s.label);
    if ((p >= 0.5 ? 1 : 0) != s.label) ++errors;
  }
  const double n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(errors) / n};
}

TrainReport fit(models::SequenceClassifier& model, const Dataset& train, const Dataset& validation,
                const TrainConfig& config, const Validator& validator, const EpochObserver& observer) {
  config.validate();
  if (train.empty()) throw DataError("training split is empty");
  if (!validator && validation.empty()) throw DataError("validation split is empty");

  std::vector<ad::Tensor> params;
  for (auto& p : model.parameters()) params.push_back(p.tensor);
  for (auto& p : params) p.zero_grad();

  AdamState adam(config.adam);
  Rng rng(config.seed);
  EarlyStopping stopping(config.patience);
  std::vector<std::vector<Scalar>> best_values;
  TrainReport report;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.minibatch_size) {
      const std::size_t end = std::min(order.size(), begin + config.minibatch_size);
      std::vector<std::span<const std::uint8_t>> files;
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) {
        files.emplace_back(train[order[i]].bytes);
        labels.push_back(train[order[i]].label);
      }
      const prep::ChunkedBatch batch = model.make_batch(files);
      ad::Tape tape;
      ad::Tensor probs = model.forward(tape, batch, true, &rng);
      ad::Tensor loss = bce_loss(tape, probs, labels);
      if (!std::isfinite(loss.item())) throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      tape.backward(loss);
      adam_step(adam, params);
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(end - begin);
    }

    const ValidationResult val = validator ? validator(model) : evaluate_loss(model, validation);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train.size());
    record.validation_loss = val.loss;
    record.validation_error = val.error_rate;
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.epochs.push_back(record);

    if (stopping.observe(val.loss)) {
      report.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : params) best_values.emplace_back(p.data().begin(), p.data().end());
    }
    if (observer) observer(record);
    if (stopping.should_stop()) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto dst = params[i].mutable_data();
      std::copy(best_values[i].begin(), best_values[i].end(), dst.begin());
    }
  }
  model.parameters_updated();
  return report;
}

}  // namespace scriptnet::train
