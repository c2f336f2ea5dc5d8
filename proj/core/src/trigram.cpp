// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/trigram.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scriptnet/errors.hpp"
#include "scriptnet/random.hpp"

namespace scriptnet::models {

namespace {

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Platt sigmoid p = logistic(a z + b) fitted by Newton's method with
// backtracking, using Platt's smoothed targets so separable data keeps a
// finite slope.
std::pair<double, double> fit_platt(const std::vector<double>& z, const std::vector<int>& labels) {
  double n_pos = 0, n_neg = 0;
  for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;
  const double hi = (n_pos + 1) / (n_pos + 2), lo = 1 / (n_neg + 2);
  // Work on standardized inputs, then map back.
  double mean = 0, var = 0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  for (double v : z) var += (v - mean) * (v - mean);
  const double sd = var > 0 ? std::sqrt(var / static_cast<double>(z.size())) : 1.0;

  auto objective = [&](double a, double b) {
    double f = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double t = labels[i] == 1 ? hi : lo;
      const double u = a * (z[i] - mean) / sd + b;
      // t log(1 + e^-u) + (1 - t) log(1 + e^u), computed stably
      const double softplus_neg = u >= 0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
      f += t * softplus_neg + (1 - t) * (softplus_neg + u);
    }
    return f;
  };
  double a = 0, b = std::log((n_pos + 1) / (n_neg + 1));
  double f = objective(a, b);
  for (int iter = 0; iter < 100; ++iter) {
    double g1 = 0, g2 = 0, h11 = 1e-12, h22 = 1e-12, h21 = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double x = (z[i] - mean) / sd;
      const double t = labels[i] == 1 ? hi : lo;
      const double p = logistic(a * x + b);
      const double d1 = p - t, d2 = p * (1 - p);
      g1 += x * d1;
      g2 += d1;
      h11 += x * x * d2;
      h22 += d2;
      h21 += x * d2;
    }
    if (std::abs(g1) < 1e-9 && std::abs(g2) < 1e-9) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < f + 1e-4 * step * gd) {
        a = na;
        b = nb;
        f = nf;
        moved = true;
        break;
      }
      step /= 2;
    }
    if (!moved) break;
  }
  return {a / sd, b - a * mean / sd};
}

}  // namespace

std::uint32_t fnv1a32(std::span<const std::uint8_t> bytes) {
  std::uint32_t h = 0x811c9dc5u;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x01000193u;
  }
  return h;
}

std::vector<std::uint32_t> trigram_featurize(std::span<const std::uint8_t> raw) {
  std::vector<std::uint32_t> out;
  if (raw.size() < 3) return out;
  out.reserve(raw.size() - 2);
  for (std::size_t i = 0; i + 3 <= raw.size(); ++i) {
    out.push_back(fnv1a32(raw.subspan(i, 3)) & static_cast<std::uint32_t>(kTrigramFeatures - 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TrigramModel::TrigramModel(TrigramMode mode, double alpha) : mode_(mode), alpha_(alpha) {
  if (!(alpha > 0.0)) throw ConfigError("trigram smoothing alpha must be positive");
  if (mode_ == TrigramMode::kLogisticRegression) {
    weights_ = Tensor::zeros({kTrigramFeatures}, true);
    bias_ = Tensor::zeros({1}, true);
  } else {
    feature_counts_ = Tensor::zeros({2, kTrigramFeatures});
    class_counts_ = Tensor::zeros({2});
    calibration_ = Tensor(ad::Shape{2}, std::vector<Scalar>{Scalar(1), Scalar(0)});
  }
}

std::string TrigramModel::kind() const {
  return mode_ == TrigramMode::kLogisticRegression ? "trigram-lr" : "trigram-nb";
}

std::vector<NamedParameter> TrigramModel::parameters() const {
  if (mode_ == TrigramMode::kLogisticRegression) return {{"lr.weights", weights_}, {"lr.bias", bias_}};
  return {{"nb.feature_counts", feature_counts_}, {"nb.class_counts", class_counts_},
          {"nb.calibration", calibration_}};
}

ConfigMap TrigramModel::config() const { return {{"trigram_alpha", format_double(alpha_)}}; }

void TrigramModel::parameters_updated() {
  if (mode_ != TrigramMode::kNaiveBayes) return;
  auto counts = feature_counts_.data();
  auto classes = class_counts_.data();
  const double n0 = classes[0], n1 = classes[1];
  present_.assign(kTrigramFeatures, 0.0);
  base_ = 0.0;
  if (n0 <= 0 || n1 <= 0) return;
  base_ = std::log(n1 / n0);
  const double denom0 = n0 + 2.0 * alpha_, denom1 = n1 + 2.0 * alpha_;
  auto absent_term = [&](double c0, double c1) {
    return std::log((denom1 - c1 - alpha_) / denom1) - std::log((denom0 - c0 - alpha_) / denom0);
  };
  auto present_term = [&](double c0, double c1) {
    return std::log((c1 + alpha_) / denom1) - std::log((c0 + alpha_) / denom0);
  };
  const double unseen_absent = absent_term(0, 0);
  const double unseen_present = present_term(0, 0) - unseen_absent;
  std::size_t unseen = 0;
  for (std::size_t f = 0; f < kTrigramFeatures; ++f) {
    const double c0 = counts[f], c1 = counts[kTrigramFeatures + f];
    if (c0 == 0 && c1 == 0) {
      ++unseen;
      present_[f] = unseen_present;
      continue;
    }
    const double a = absent_term(c0, c1);
    base_ += a;
    present_[f] = present_term(c0, c1) - a;
  }
  base_ += static_cast<double>(unseen) * unseen_absent;
}

double TrigramModel::predict_features(std::span<const std::uint32_t> features) const {
  if (mode_ == TrigramMode::kLogisticRegression) {
    auto w = weights_.data();
    double z = bias_.data()[0];
    for (std::uint32_t f : features) z += w[f];
    return logistic(z);
  }
  const auto cal = calibration_.data();
  return logistic(static_cast<double>(cal[0]) * log_odds(features) + static_cast<double>(cal[1]));
}

double TrigramModel::log_odds(std::span<const std::uint32_t> features) const {
  if (present_.empty()) throw ContractError("naive Bayes model has not been trained");
  double z = base_;
  for (std::uint32_t f : features) z += present_[f];
  return z;
}

double TrigramModel::score_bytes(std::span<const std::uint8_t> window) const {
  return predict_features(trigram_featurize(window));
}

void TrigramModel::fit_bayes(const std::vector<std::vector<std::uint32_t>>& docs, const std::vector<int>& labels,
                             bool calibrate) {
  auto counts = feature_counts_.mutable_data();
  auto classes = class_counts_.mutable_data();
  std::fill(counts.begin(), counts.end(), Scalar(0));
  std::fill(classes.begin(), classes.end(), Scalar(0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::size_t c = static_cast<std::size_t>(labels[i]);
    classes[c] += 1;
    for (std::uint32_t f : docs[i]) counts[c * kTrigramFeatures + f] += 1;
  }
  if (classes[0] == 0 || classes[1] == 0) throw DataError("naive Bayes training needs both classes");
  parameters_updated();
  if (!calibrate) return;

  std::vector<double> z(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) z[i] = log_odds(docs[i]);
  const auto [a, b] = fit_platt(z, labels);
  auto cal = calibration_.mutable_data();
  cal[0] = static_cast<Scalar>(a);
  cal[1] = static_cast<Scalar>(b);
}

void TrigramModel::fit_logistic(const std::vector<std::vector<std::uint32_t>>& docs, const std::vector<int>& labels,
                                const TrigramOptions& options) {
  if (options.epochs < 1 || options.minibatch_size < 1) throw ConfigError("trigram epochs and minibatch size must be positive");
  train::AdamState adam(options.adam);
  std::vector<Tensor> params{weights_, bias_};
  Rng rng(options.seed);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += options.minibatch_size) {
      const std::size_t end = std::min(order.size(), begin + options.minibatch_size);
      const double inv_n = 1.0 / static_cast<double>(end - begin);
      auto gw = weights_.mutable_grad();
      auto gb = bias_.mutable_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& doc = docs[order[i]];
        const double residual = (predict_features(doc) - labels[order[i]]) * inv_n;
        for (std::uint32_t f : doc) gw[f] += static_cast<Scalar>(residual);
        gb[0] += static_cast<Scalar>(residual);
      }
      train::adam_step(adam, params);
    }
  }
}

TrigramModel trigram_train(const Dataset& corpus, TrigramMode mode, const TrigramOptions& options) {
  if (corpus.empty()) throw DataError("trigram training corpus is empty");
  TrigramModel model(mode, options.alpha);
  std::vector<std::vector<std::uint32_t>> docs;
  std::vector<int> labels;
  docs.reserve(corpus.size());
  for (const auto& s : corpus) {
    if (s.label != 0 && s.label != 1) throw DataError("label " + std::to_string(s.label) + " is not 0 or 1");
    docs.push_back(trigram_featurize(s.bytes));
    labels.push_back(s.label);
  }
  if (mode == TrigramMode::kNaiveBayes) {
    model.fit_bayes(docs, labels, options.calibrate);
  } else {
    model.fit_logistic(docs, labels, options);
  }
  return model;
}

double trigram_predict(const TrigramModel& model, std::span<const std::uint8_t> raw) { return model.score_bytes(raw); }

}  // namespace scriptnet::models
