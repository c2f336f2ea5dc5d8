// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scriptnet/errors.hpp"

namespace scriptnet::train {

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

double bce_value(double probability, int label) {
  const double p = clamp_probability(probability);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

ad::Tensor bce_loss(ad::Tape& tape, const ad::Tensor& probabilities, std::span<const int> labels) {
  if (probabilities.rank() != 1 || probabilities.size() != labels.size()) {
    throw DimensionError("bce_loss: " + std::to_string(labels.size()) + " labels for probabilities of shape " +
                         ad::shape_string(probabilities.shape()));
  }
  for (int t : labels) {
    if (t != 0 && t != 1) throw DataError("bce_loss: label " + std::to_string(t) + " is not 0 or 1");
  }
  const std::size_t n = labels.size();
  auto pv = probabilities.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += bce_value(pv[i], labels[i]);
  ad::Tensor loss = ad::Tensor::scalar(static_cast<Scalar>(total / static_cast<double>(n)));
  tape.check(loss, "bce_loss");
  std::vector<int> kept(labels.begin(), labels.end());
  return tape.record(loss, {probabilities}, [probabilities, kept = std::move(kept)](const ad::GradContext& ctx) {
    const double g = ctx.out_grad()[0];
    auto pv = probabilities.data();
    auto dp = ctx.in_grad(0);
    const double inv_n = 1.0 / static_cast<double>(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const double p = clamp_probability(pv[i]);
      const double d = kept[i] == 1 ? -1.0 / p : 1.0 / (1.0 - p);
      dp[i] += static_cast<Scalar>(g * d * inv_n);
    }
  });
}

void adam_step(AdamState& state, std::span<ad::Tensor> params) {
  if (state.m_.empty()) {
    for (const auto& p : params) {
      state.m_.emplace_back(p.size(), Scalar(0));
      state.v_.emplace_back(p.size(), Scalar(0));
    }
  }
  if (state.m_.size() != params.size()) {
    throw ContractError("adam_step: optimizer tracks " + std::to_string(state.m_.size()) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m_[i].size() != params[i].size()) {
      throw ContractError("adam_step: parameter " + std::to_string(i) + " changed size");
    }
  }

  const AdamConfig& c = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const Scalar b1 = static_cast<Scalar>(c.beta1), b2 = static_cast<Scalar>(c.beta2);
  const Scalar one_b1 = static_cast<Scalar>(1.0 - c.beta1), one_b2 = static_cast<Scalar>(1.0 - c.beta2);
  const Scalar step_size = static_cast<Scalar>(c.learning_rate / correct1);
  const Scalar inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(correct2));
  const Scalar eps = static_cast<Scalar>(c.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor& p = params[i];
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    auto w = p.mutable_data();
    const bool has_grad = p.has_grad();
    auto g = p.grad();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const Scalar gj = has_grad ? g[j] : Scalar(0);
      m[j] = b1 * m[j] + one_b1 * gj;
      v[j] = b2 * v[j] + one_b2 * gj * gj;
      // lr * m_hat / (sqrt(v_hat) + eps)
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
    p.zero_grad();
  }
}

}  // namespace scriptnet::train
