// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scriptnet/config_map.hpp"
#include "scriptnet/errors.hpp"

namespace scriptnet::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::ordered_json threshold_json(double t) {
  return std::isinf(t) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(t);
}

double threshold_from(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw DataError("bad threshold value in report");
  }
  return j.get<double>();
}

}  // namespace

void ScoredSet::validate() const {
  if (scores.size() != labels.size()) {
    throw DataError("scored set has " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || scores[i] < 0.0 || scores[i] > 1.0) {
      throw DataError("score " + std::to_string(i) + " is not a probability");
    }
    if (labels[i] != 0 && labels[i] != 1) throw DataError("label " + std::to_string(i) + " is not 0 or 1");
  }
}

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

Confusion confusion(const ScoredSet& scored, double threshold) {
  scored.validate();
  Confusion c;
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    const bool predicted = scored.scores[i] >= threshold;
    if (scored.labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

MetricsReport metrics(const ScoredSet& scored, double threshold) {
  if (scored.scores.empty()) throw DataError("cannot compute metrics of an empty set");
  MetricsReport r;
  r.count = scored.scores.size();
  r.threshold = threshold;
  r.counts = confusion(scored, threshold);
  const auto& c = r.counts;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(r.count);
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  if (scored.positives() > 0 && scored.negatives() > 0) r.auc = roc_and_auc(scored).auc;
  return r;
}

RocResult roc_and_auc(const ScoredSet& scored) {
  scored.validate();
  const std::size_t pos = scored.positives();
  const std::size_t neg = scored.negatives();
  if (pos == 0 || neg == 0) throw DataError("ROC analysis needs both classes");

  std::vector<std::size_t> order(scored.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored.scores[a] > scored.scores[b]; });

  RocResult out;
  out.curve.points.push_back({kInf, 0.0, 0.0});
  // Area accumulated in units of (false positive, true positive) pairs so the
  // result is an exact pair count before the final division.
  double area2 = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scored.scores[order[i]];
    std::size_t dtp = 0, dfp = 0;
    for (; i < order.size() && scored.scores[order[i]] == s; ++i) {
      scored.labels[order[i]] == 1 ? ++dtp : ++dfp;
    }
    area2 += static_cast<double>(dfp) * static_cast<double>(2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    out.curve.points.push_back(
        {s, static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  out.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return out;
}

OperatingPoint tpr_at_fpr(const RocCurve& curve, double target_fpr) {
  OperatingPoint best{target_fpr, 0.0, kInf};
  bool found = false;
  for (const auto& p : curve.points) {
    if (p.fpr <= target_fpr && (!found || p.tpr > best.tpr)) {
      best.tpr = p.tpr;
      best.threshold = p.threshold;
      found = true;
    }
  }
  return best;
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out += std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold);
    out += ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
  }
  return out;
}

RocCurve roc_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("threshold,fpr,tpr", 0) != 0) {
    throw DataError("ROC CSV must start with the header threshold,fpr,tpr");
  }
  RocCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, f, r;
    if (!std::getline(row, t, ',') || !std::getline(row, f, ',') || !std::getline(row, r)) {
      throw DataError("ROC CSV line " + std::to_string(line_no) + ": expected three fields");
    }
    try {
      RocPoint p;
      p.threshold = t == "inf" ? kInf : parse_double("threshold", t);
      p.fpr = parse_double("fpr", f);
      p.tpr = parse_double("tpr", r);
      curve.points.push_back(p);
    } catch (const ConfigError& e) {
      throw DataError("ROC CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return curve;
}

std::string format_percent(double fraction) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", 100.0 * fraction);
  return buf;
}

std::string report_to_json(const MetricsReport& report, std::span<const OperatingPoint> operating_points) {
  nlohmann::ordered_json j;
  j["count"] = report.count;
  j["threshold"] = report.threshold;
  j["confusion"] = {{"tp", report.counts.tp}, {"fp", report.counts.fp}, {"tn", report.counts.tn},
                    {"fn", report.counts.fn}};
  j["accuracy"] = report.accuracy;
  j["precision"] = optional_json(report.precision);
  j["recall"] = optional_json(report.recall);
  j["f1"] = optional_json(report.f1);
  j["auc"] = optional_json(report.auc);
  auto& ops = j["tpr_at_fpr"] = nlohmann::ordered_json::array();
  for (const auto& op : operating_points) {
    ops.push_back({{"fpr", op.target_fpr}, {"tpr", op.tpr}, {"threshold", threshold_json(op.threshold)}});
  }
  nlohmann::ordered_json pct;
  pct["accuracy"] = format_percent(report.accuracy);
  for (const auto& [name, value] : {std::pair{"precision", report.precision}, std::pair{"recall", report.recall},
                                    std::pair{"f1", report.f1}, std::pair{"auc", report.auc}}) {
    pct[name] = value ? nlohmann::ordered_json(format_percent(*value)) : nlohmann::ordered_json("undefined");
  }
  j["percent"] = pct;
  return j.dump(2) + "\n";
}

ParsedReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics report is not valid JSON: ") + e.what());
  }
  ParsedReport out;
  try {
    auto& r = out.report;
    r.count = j.at("count").get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    const auto& c = j.at("confusion");
    r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                c.at("fn").get<std::size_t>()};
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = optional_from(j, "precision");
    r.recall = optional_from(j, "recall");
    r.f1 = optional_from(j, "f1");
    r.auc = optional_from(j, "auc");
    for (const auto& op : j.at("tpr_at_fpr")) {
      out.operating_points.push_back(
          {op.at("fpr").get<double>(), op.at("tpr").get<double>(), threshold_from(op.at("threshold"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metrics report is missing fields: ") + e.what());
  }
  return out;
}

std::string format_report_table(const ParsedReport& parsed, const RocCurve* curve, double window_fpr) {
  const auto& r = parsed.report;
  auto cell = [](const std::optional<double>& v) { return v ? format_percent(*v) : std::string("undefined"); };
  std::ostringstream out;
  out << "files " << r.count << "  threshold " << format_double(r.threshold) << "\n";
  out << "TP " << r.counts.tp << "  FP " << r.counts.fp << "  TN " << r.counts.tn << "  FN " << r.counts.fn << "\n";
  out << "Accuracy (%)   " << format_percent(r.accuracy) << "\n";
  out << "Precision (%)  " << cell(r.precision) << "\n";
  out << "Recall (%)     " << cell(r.recall) << "\n";
  out << "F1 (%)         " << cell(r.f1) << "\n";
  out << "AUC (%)        " << cell(r.auc) << "\n";
  for (const auto& op : parsed.operating_points) {
    out << "TPR (%) at FPR " << format_percent(op.target_fpr) << "%  " << format_percent(op.tpr) << "\n";
  }
  if (curve != nullptr) {
    out << "ROC points with FPR <= " << format_percent(window_fpr) << "%\n";
    out << "  threshold  fpr(%)  tpr(%)\n";
    for (const auto& p : curve->points) {
      if (p.fpr > window_fpr) break;
      out << "  " << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << "  "
          << format_percent(p.fpr) << "  " << format_percent(p.tpr) << "\n";
    }
  }
  return out.str();
}

}  // namespace scriptnet::eval
