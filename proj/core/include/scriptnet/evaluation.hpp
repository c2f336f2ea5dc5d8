// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Detection metrics over scored files: confusion counts, accuracy, precision,
// recall, F1, ROC curve, AUC and TPR at a false positive budget.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scriptnet::eval {

struct ScoredSet {
  std::vector<double> scores;  // probabilities in [0, 1]
  std::vector<int> labels;     // 1 = malicious

  // DataError on length mismatch, non-finite or out-of-range scores, or labels
  // outside {0, 1}.
  void validate() const;
  std::size_t positives() const;
  std::size_t negatives() const { return labels.size() - positives(); }
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  bool operator==(const Confusion&) const = default;
};

// A score at or above the threshold is predicted malicious.
Confusion confusion(const ScoredSet& scored, double threshold);

// Ratios with a zero denominator are left empty.
struct MetricsReport {
  std::size_t count = 0;
  double threshold = 0.5;
  Confusion counts;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> auc;  // empty unless both classes are present
};

// Throws DataError on an empty set.
MetricsReport metrics(const ScoredSet& scored, double threshold = 0.5);

struct RocPoint {
  double threshold = 0.0;  // +inf for the leading (0, 0) point
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

// One point per distinct score, thresholds descending, plus the leading
// (0, 0). Trapezoidal AUC. Throws DataError unless both classes are present.
RocResult roc_and_auc(const ScoredSet& scored);

struct OperatingPoint {
  double target_fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // +inf when no point fits the budget
};

// Largest TPR over curve points with fpr <= target.
OperatingPoint tpr_at_fpr(const RocCurve& curve, double target_fpr);

// "threshold,fpr,tpr" rows; the infinite threshold is written as "inf".
std::string roc_to_csv(const RocCurve& curve);
RocCurve roc_from_csv(const std::string& text);

// 0.972 -> "97.2000"
std::string format_percent(double fraction);

// Structured JSON text of a report and its operating points.
std::string report_to_json(const MetricsReport& report, std::span<const OperatingPoint> operating_points);

struct ParsedReport {
  MetricsReport report;
  std::vector<OperatingPoint> operating_points;
};
ParsedReport report_from_json(const std::string& text);

// Human-readable summary table with percentages.
std::string format_report_table(const ParsedReport& parsed, const RocCurve* curve = nullptr,
                                double window_fpr = 0.02);

}  // namespace scriptnet::eval
