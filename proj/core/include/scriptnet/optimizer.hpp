// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scriptnet/autodiff.hpp"

namespace scriptnet::train {

// Lower clamp applied to probabilities before taking logs; the upper clamp
// is 1 - kProbabilityClamp.
inline constexpr double kProbabilityClamp = 1e-7;

// Mean binary cross-entropy -(t log p + (1 - t) log(1 - p)) over a batch of
// probabilities [B]. Labels must be 0 or 1 (DataError otherwise).
ad::Tensor bce_loss(ad::Tape& tape, const ad::Tensor& probabilities, std::span<const int> labels);

// Same loss for plain values, no tape.
double bce_value(double probability, int label);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<std::vector<Scalar>>& first_moments() const { return m_; }
  const std::vector<std::vector<Scalar>>& second_moments() const { return v_; }

 private:
  friend void adam_step(AdamState& state, std::span<ad::Tensor> params);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<Scalar>> m_;
  std::vector<std::vector<Scalar>> v_;
};

// One bias-corrected Adam update of every parameter from its grad buffer
// (missing buffers count as zero), then zeroes the grads. Moment buffers are
// sized on the first call; later calls must pass parameters of the same
// shapes in the same order.
void adam_step(AdamState& state, std::span<ad::Tensor> params);

}  // namespace scriptnet::train
