// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "scriptnet/checkpoint.hpp"
#include "scriptnet/data_io.hpp"
#include "scriptnet/errors.hpp"
#include "scriptnet/evaluation.hpp"
#include "scriptnet/models.hpp"
#include "scriptnet/run_config.hpp"
#include "scriptnet/training.hpp"
#include "scriptnet/trigram.hpp"

namespace scriptnet::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string manifest;
  std::string model;
  std::string checkpoint;
  std::string out;
  std::string roc;
  std::string split = "test";
  std::string fpr_targets;
  std::string window_policy;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::vector<std::string> sets;
  std::vector<std::string> paths;
  double fpr_window = 0.02;
};

RunConfig load_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.model.empty()) cfg.set("model", o.model);
  if (!o.window_policy.empty()) cfg.set("window_policy", o.window_policy);
  if (!o.fpr_targets.empty()) cfg.set("fpr_targets", o.fpr_targets);
  if (o.threshold) cfg.set("threshold", format_double(*o.threshold));
  return cfg;
}

std::vector<double> parse_targets(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const double v = parse_double("fpr_targets", item);
    if (v < 0.0 || v > 1.0) throw ConfigError("FPR target " + item + " is outside [0, 1]");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("fpr_targets is empty");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

data::Splits manifest_splits(const Options& o, const RunConfig& cfg) {
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  const auto entries = data::load_manifest(o.manifest);
  return data::split_by_time(entries, cfg.synthetic_spec().dates);
}

int cmd_gen_synth(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(o);
  if (o.seed) cfg.set("corpus_seed", std::to_string(*o.seed));
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto spec = cfg.synthetic_spec();
  const auto corpus = data::generate_synthetic_corpus(spec, o.out);
  err << "wrote " << corpus.entries.size() << " files (" << corpus.malicious << " malicious) to " << o.out << "\n";
  out << "manifest " << corpus.manifest.string() << "\n";
  out << "files " << corpus.entries.size() << " malicious " << corpus.malicious << "\n";
  out << "train " << corpus.per_split[0] << " validation " << corpus.per_split[1] << " test " << corpus.per_split[2]
      << "\n";
  out << "digest " << data::corpus_digest(o.out) << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(o);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  const std::string kind = cfg.get("model", "cpols");
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto tc = cfg.train_config();
  auto model = models::make_model(kind, cfg.model_map(kind), tc.seed);
  const auto splits = manifest_splits(o, cfg);
  if (splits.train.empty() || splits.validation.empty() || splits.test.empty()) {
    throw DataError("manifest must populate the train, validation and test date ranges (got " +
                    std::to_string(splits.train.size()) + "/" + std::to_string(splits.validation.size()) + "/" +
                    std::to_string(splits.test.size()) + ")");
  }
  if (splits.dropped > 0) err << "warning: " << splits.dropped << " manifest entries fall outside every split\n";

  io::CheckpointMeta meta;
  meta.seed = tc.seed;
  meta.threshold = parse_double("threshold", cfg.get("threshold", "0.5"));
  const fs::path ckpt(o.out);

  if (auto* seq = dynamic_cast<models::SequenceClassifier*>(model.get())) {
    const auto train = data::load_samples(splits.train, seq->max_length());
    const auto validation = data::load_samples(splits.validation, seq->max_length());
    err << "training " << kind << " (" << models::count_parameters(*model) << " parameters) on " << train.size()
        << " files, validating on " << validation.size() << "\n";
    const auto report = train::fit(*seq, train, validation, tc, {}, [&](const train::EpochRecord& e) {
      err << "epoch " << e.epoch << " train_loss " << e.train_loss << " validation_loss " << e.validation_loss
          << " validation_error " << e.validation_error << " (" << e.seconds << " s)\n";
    });
    const auto& best = report.epochs.at(report.best_epoch - 1);
    meta.metrics = {{"best_epoch", static_cast<double>(report.best_epoch)},
                    {"validation_loss", best.validation_loss},
                    {"validation_error", best.validation_error}};
    write_text(fs::path(ckpt.string() + ".train.jsonl"), report.to_jsonl());
  } else {
    const auto mode = kind == "trigram-lr" ? models::TrigramMode::kLogisticRegression : models::TrigramMode::kNaiveBayes;
    const auto train = data::load_samples(splits.train);
    const auto validation = data::load_samples(splits.validation);
    err << "training " << kind << " on " << train.size() << " files\n";
    auto trained = std::make_unique<models::TrigramModel>(models::trigram_train(train, mode, cfg.trigram_options()));
    double loss = 0.0;
    std::size_t errors = 0;
    for (const auto& s : validation) {
      const double p = trained->score_bytes(s.bytes);
      loss += train::bce_value(p, s.label);
      errors += static_cast<std::size_t>((p >= 0.5 ? 1 : 0) != s.label);
    }
    const auto n = static_cast<double>(validation.size());
    meta.metrics = {{"validation_loss", loss / n}, {"validation_error", static_cast<double>(errors) / n}};
    model = std::move(trained);
  }
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  io::save_checkpoint(ckpt, *model, meta);
  out << "checkpoint " << ckpt.string() << "\n";
  for (const auto& [k, v] : meta.metrics) out << k << " " << format_double(v) << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto targets = parse_targets(cfg.get("fpr_targets", "0.005,0.01,0.02"));
  const auto policy = models::parse_window_policy(cfg.get("window_policy", "first_window"));
  const auto ckpt = io::load_checkpoint(o.checkpoint);
  const double threshold = cfg.has("threshold") ? parse_double("threshold", cfg.get("threshold", ""))
                                                 : ckpt.meta.threshold;

  const auto splits = manifest_splits(o, cfg);
  const std::vector<data::ManifestEntry>* chosen = nullptr;
  if (o.split == "train") {
    chosen = &splits.train;
  } else if (o.split == "validation") {
    chosen = &splits.validation;
  } else if (o.split == "test") {
    chosen = &splits.test;
  } else {
    throw ConfigError("--split must be train, validation or test");
  }
  if (chosen->empty()) throw DataError("the " + o.split + " split is empty");

  eval::ScoredSet scored;
  for (const auto& e : *chosen) {
    const auto bytes = data::read_file(e.path);
    scored.scores.push_back(models::predict_file(*ckpt.model, bytes, policy));
    scored.labels.push_back(e.label);
  }
  if (scored.positives() == 0 || scored.negatives() == 0) {
    throw DataError("the " + o.split + " split holds a single class; ROC analysis needs both");
  }
  const auto report = eval::metrics(scored, threshold);
  const auto roc = eval::roc_and_auc(scored);
  std::vector<eval::OperatingPoint> ops;
  for (double t : targets) ops.push_back(eval::tpr_at_fpr(roc.curve, t));

  const fs::path report_path(o.out);
  fs::path roc_path = o.roc.empty() ? fs::path(report_path).replace_extension(".roc.csv") : fs::path(o.roc);
  write_text(report_path, eval::report_to_json(report, ops));
  write_text(roc_path, eval::roc_to_csv(roc.curve));
  err << "scored " << scored.scores.size() << " files from the " << o.split << " split\n";
  out << eval::format_report_table({report, ops});
  out << "report " << report_path.string() << "\nroc " << roc_path.string() << "\n";
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(o);
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (o.paths.empty()) throw ConfigError("predict needs at least one file");
  const auto policy = models::parse_window_policy(cfg.get("window_policy", "first_window"));
  const auto ckpt = io::load_checkpoint(o.checkpoint);
  const double threshold = cfg.has("threshold") ? parse_double("threshold", cfg.get("threshold", ""))
                                                 : ckpt.meta.threshold;
  int status = kOk;
  for (const auto& path : o.paths) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = data::read_file(path);
    } catch (const IoError& e) {
      out << path << ", error, " << e.what() << "\n";
      err << "error: " << e.what() << "\n";
      status = kPartialFailure;
      continue;
    }
    const double p = models::predict_file(*ckpt.model, bytes, policy);
    char prob[32];
    std::snprintf(prob, sizeof prob, "%.6f", p);
    out << path << ", " << prob << ", " << (p >= threshold ? "malicious" : "benign") << "\n";
  }
  return status;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  if (o.out.empty()) throw ConfigError("report needs --metrics");
  const auto parsed = eval::report_from_json(read_text(o.out));
  std::optional<eval::RocCurve> curve;
  if (!o.roc.empty()) curve = eval::roc_from_csv(read_text(o.roc));
  out << eval::format_report_table(parsed, curve ? &*curve : nullptr, o.fpr_window);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Malicious script detection with chunked convolutional-recurrent models", "scriptnet"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file (key = value)");
    sub->add_option("--set", o.sets, "Override one configuration key, key=value")->take_all();
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic planted-motif corpus");
  add_common(gen);
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Corpus seed");

  auto* train = app.add_subcommand("train", "Train a model and write its best-validation checkpoint");
  add_common(train);
  train->add_option("--manifest", o.manifest, "Corpus manifest CSV")->required();
  train->add_option("--model", o.model, "cpols, lamp, trigram-lr or trigram-nb");
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--seed", o.seed, "Initialization and shuffling seed");
  train->add_option("--threshold", o.threshold, "Verdict threshold stored in the checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Score a manifest split and write metrics and ROC CSV");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  evaluate->add_option("--manifest", o.manifest, "Corpus manifest CSV")->required();
  evaluate->add_option("--split", o.split, "train, validation or test")->capture_default_str();
  evaluate->add_option("--out", o.out, "Metrics report path (JSON)")->required();
  evaluate->add_option("--roc", o.roc, "ROC CSV path (default: report path with .roc.csv)");
  evaluate->add_option("--fpr-targets", o.fpr_targets, "Comma-separated FPR budgets, default 0.005,0.01,0.02");
  evaluate->add_option("--window-policy", o.window_policy, "first_window or max_over_windows");
  evaluate->add_option("--threshold", o.threshold, "Override the checkpoint verdict threshold");

  auto* predict = app.add_subcommand("predict", "Print path, probability, verdict for each file");
  add_common(predict);
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
  predict->add_option("--window-policy", o.window_policy, "first_window or max_over_windows");
  predict->add_option("--threshold", o.threshold, "Override the checkpoint verdict threshold");
  predict->add_option("paths", o.paths, "Files to score")->required();

  auto* report = app.add_subcommand("report", "Summarize a metrics report and ROC CSV");
  report->add_option("--metrics", o.out, "Metrics report JSON")->required();
  report->add_option("--roc", o.roc, "ROC CSV");
  report->add_option("--fpr-window", o.fpr_window, "Largest FPR of listed ROC points")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(o, out, err);
    if (train->parsed()) return cmd_train(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, out, err);
    if (predict->parsed()) return cmd_predict(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.front()->help());
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IntegrityError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace scriptnet::cli
