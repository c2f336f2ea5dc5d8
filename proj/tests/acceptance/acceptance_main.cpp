// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Criteria 1-4 re-run filtered unit test binaries
// under a time budget; 5-8 generate synthetic corpora, train and evaluate.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scriptnet/checkpoint.hpp"
#include "scriptnet/data_io.hpp"
#include "scriptnet/errors.hpp"
#include "scriptnet/evaluation.hpp"
#include "scriptnet/models.hpp"
#include "scriptnet/run_config.hpp"
#include "scriptnet/training.hpp"
#include "scriptnet/trigram.hpp"
#include "scriptnet_cli/commands.hpp"

namespace fs = std::filesystem;
using namespace scriptnet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  fs::path config;
  std::string unit;
  std::string unit_f64;
  std::ofstream log;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Runs a gtest binary with a filter; returns pass, test count and seconds.
struct GtestRun {
  bool ok = false;
  int tests = 0;
  double seconds = 0;
};

GtestRun run_gtest(Context& ctx, const std::string& binary, const std::string& filter, const std::string& tag) {
  const fs::path out = ctx.work / ("gtest_" + tag + ".log");
  const std::string cmd = "\"" + binary + "\" --gtest_filter='" + filter + "' > \"" + out.string() + "\" 2>&1";
  const auto start = Clock::now();
  const int status = std::system(cmd.c_str());
  GtestRun r;
  r.seconds = seconds_since(start);
  const std::string text = slurp(out);
  std::smatch m;
  if (std::regex_search(text, m, std::regex(R"(\[==========\] (\d+) tests? from)"))) r.tests = std::stoi(m[1]);
  r.ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0 && r.tests > 0;
  ctx.log << "[" << tag << "] " << binary << " filter " << filter << ": " << (r.ok ? "ok" : "failed") << ", "
          << r.tests << " tests, " << fmt(r.seconds, 1) << " s\n";
  if (!r.ok) ctx.log << text << "\n";
  ctx.log.flush();
  return r;
}

Outcome gtest_criterion(Context& ctx, const std::string& filter, const std::string& tag, double budget,
                        bool both_precisions) {
  std::vector<std::pair<std::string, std::string>> runs{{ctx.unit, "f32"}};
  if (both_precisions) runs.emplace_back(ctx.unit_f64, "f64");
  Outcome o{true, ""};
  for (const auto& [binary, precision] : runs) {
    const auto r = run_gtest(ctx, binary, filter, tag + "_" + precision);
    const bool in_time = r.seconds < budget;
    o.pass = o.pass && r.ok && in_time;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += precision + " " + std::to_string(r.tests) + " tests " + (r.ok ? "passed" : "FAILED") + " in " +
                fmt(r.seconds, 1) + " s (budget " + fmt(budget, 0) + " s)";
  }
  return o;
}

int run_cli(Context& ctx, std::vector<std::string> args) {
  args.insert(args.begin(), "scriptnet");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  ctx.log << "$";
  for (const auto& a : args) ctx.log << " " << a;
  ctx.log << "\n" << out.str() << err.str() << "exit " << code << "\n";
  ctx.log.flush();
  return code;
}

struct Corpus {
  fs::path manifest;
  Dataset train, validation;
  std::vector<data::ManifestEntry> test;
};

Corpus make_corpus(Context& ctx, const std::string& name, const std::vector<std::string>& sets) {
  const fs::path dir = ctx.work / name;
  fs::remove_all(dir);
  std::vector<std::string> args{"gen-synth", "--config", ctx.config.string(), "--out", dir.string()};
  for (const auto& s : sets) {
    args.push_back("--set");
    args.push_back(s);
  }
  if (run_cli(ctx, args) != 0) throw scriptnet::Error("corpus generation failed for " + name);
  RunConfig cfg = RunConfig::load(ctx.config);
  Corpus c;
  c.manifest = dir / "manifest.csv";
  const auto splits = data::split_by_time(data::load_manifest(c.manifest), cfg.synthetic_spec().dates);
  c.train = data::load_samples(splits.train);
  c.validation = data::load_samples(splits.validation);
  c.test = splits.test;
  return c;
}

eval::ScoredSet score(const models::Model& model, const std::vector<data::ManifestEntry>& entries) {
  eval::ScoredSet s;
  for (const auto& e : entries) {
    s.scores.push_back(models::predict_file(model, data::read_file(e.path), models::WindowPolicy::kFirstWindow));
    s.labels.push_back(e.label);
  }
  return s;
}

struct TrainedCPoLS {
  std::unique_ptr<models::Model> model;
  double train_seconds = 0;
  std::size_t epochs = 0;
  double auc = 0;
  double tpr_at_2 = 0;
  double eval_seconds = 0;
};

TrainedCPoLS train_cpols(Context& ctx, const Corpus& corpus, const std::string& tag) {
  const RunConfig cfg = RunConfig::load(ctx.config);
  const auto tc = cfg.train_config();
  TrainedCPoLS out;
  out.model = models::make_model("cpols", cfg.model_map("cpols"), tc.seed);
  auto& seq = dynamic_cast<models::SequenceClassifier&>(*out.model);
  const auto start = Clock::now();
  const auto report = train::fit(seq, corpus.train, corpus.validation, tc, {}, [&](const train::EpochRecord& e) {
                                   ctx.log << "[" << tag << "] epoch " << e.epoch << " train_loss " << e.train_loss
                                           << " validation_loss " << e.validation_loss << " validation_error "
                                           << e.validation_error << " (" << fmt(e.seconds, 1) << " s)\n";
                                   ctx.log.flush();
                                 });
  out.train_seconds = seconds_since(start);
  out.epochs = report.epochs.size();
  const auto eval_start = Clock::now();
  const auto scored = score(*out.model, corpus.test);
  const auto roc = eval::roc_and_auc(scored);
  out.auc = roc.auc;
  out.tpr_at_2 = eval::tpr_at_fpr(roc.curve, 0.02).tpr;
  out.eval_seconds = seconds_since(eval_start);
  ctx.log << "[" << tag << "] trained " << out.epochs << " epochs in " << fmt(out.train_seconds, 1) << " s, test AUC "
          << fmt(out.auc, 6) << ", TPR@2% " << fmt(out.tpr_at_2, 6) << "\n";
  return out;
}

double trigram_auc(Context& ctx, const Corpus& corpus, models::TrigramMode mode, const std::string& tag) {
  const auto model = models::trigram_train(corpus.train, mode);
  const double auc = eval::roc_and_auc(score(model, corpus.test)).auc;
  ctx.log << "[" << tag << "] test AUC " << fmt(auc, 6) << "\n";
  ctx.log.flush();
  return auc;
}

// A benign-looking file longer than one window with a clean motif planted
// after byte 60000.
std::vector<std::uint8_t> late_motif_file(std::size_t window) {
  Rng rng(2026);
  const auto& motif = data::default_motifs().front();
  std::vector<std::uint8_t> bytes;
  do {
    bytes = data::make_background(window + 30000, data::Background::kScript, data::SyntheticSpec{}.decoy_rate, rng);
  } while (data::contains_any(bytes, data::default_motifs()));
  std::copy(motif.begin(), motif.end(), bytes.begin() + static_cast<std::ptrdiff_t>(window + 10000));
  return bytes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ScriptNet acceptance suite"};
  std::string work = "acceptance_work";
  std::string config = SCRIPTNET_ACCEPTANCE_CONFIG;
  std::string unit = SCRIPTNET_UNIT_TESTS;
  std::string unit_f64 = SCRIPTNET_UNIT_TESTS_F64;
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for corpora, checkpoints and logs")->capture_default_str();
  app.add_option("--config", config, "Acceptance run configuration")->capture_default_str();
  app.add_option("--unit-tests", unit, "Float unit test binary");
  app.add_option("--unit-tests-f64", unit_f64, "Double unit test binary");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.work = fs::absolute(work);
  ctx.config = config;
  ctx.unit = unit;
  ctx.unit_f64 = unit_f64;
  fs::create_directories(ctx.work);
  ctx.log.open(ctx.work / "acceptance.log");
  const std::set<int> wanted(only.begin(), only.end());
  auto want = [&](int id) { return wanted.empty() || wanted.count(id) != 0; };

  std::vector<std::pair<int, Outcome>> results;
  auto report = [&](int id, const std::string& name, Outcome o) {
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail
              << std::endl;
    results.emplace_back(id, std::move(o));
  };
  auto guarded = [&](int id, const std::string& name, auto&& body) {
    if (!want(id)) return;
    try {
      report(id, name, body());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("error: ") + e.what()});
    }
  };

  guarded(1, "gradient checks", [&] {
    return gtest_criterion(ctx, "AllOps/GradientTest.*:GradientCheck.*", "gradients", 120, true);
  });
  guarded(2, "oracles", [&] { return gtest_criterion(ctx, "Oracle*", "oracles", 120, true); });
  guarded(3, "full-size pipeline shapes", [&] {
    return gtest_criterion(ctx, "PipelineShapes.*:Conv1d.DefaultChunkOutLength", "shapes", 600, false);
  });
  guarded(4, "tiny overfit", [&] { return gtest_criterion(ctx, "Overfit.*", "overfit", 60, false); });

  const bool need_default = want(5) || want(6) || want(7) || want(8);
  std::optional<Corpus> base;
  std::optional<TrainedCPoLS> cpols;
  std::string corpus_error;
  if (need_default) {
    try {
      base = make_corpus(ctx, "corpus_default", {});
      if (want(5) || want(7) || want(8)) cpols = train_cpols(ctx, *base, "cpols_default");
    } catch (const std::exception& e) {
      corpus_error = e.what();
    }
  }
  auto require_model = [&] {
    if (!cpols) throw scriptnet::Error("acceptance model unavailable: " + corpus_error);
  };

  guarded(5, "default corpus detection", [&] {
    require_model();
    const double total = cpols->train_seconds + cpols->eval_seconds;
    Outcome o;
    o.pass = cpols->auc >= 0.95 && cpols->tpr_at_2 >= 0.90 && cpols->epochs <= 15 && total < 30 * 60;
    o.detail = "AUC " + fmt(cpols->auc) + " (>= 0.95), TPR@FPR<=2% " + fmt(cpols->tpr_at_2) + " (>= 0.90), " +
               std::to_string(cpols->epochs) + " epochs, " + fmt(total, 0) + " s (< 1800 s)";
    return o;
  });

  guarded(6, "trigram baselines and ordering", [&] {
    if (!base) throw scriptnet::Error("default corpus unavailable: " + corpus_error);
    const double lr = trigram_auc(ctx, *base, models::TrigramMode::kLogisticRegression, "trigram_lr_default");
    const double nb = trigram_auc(ctx, *base, models::TrigramMode::kNaiveBayes, "trigram_nb_default");
    const Corpus noisy = make_corpus(ctx, "corpus_noise15", {"noise_rate=0.15"});
    const double lr15 = trigram_auc(ctx, noisy, models::TrigramMode::kLogisticRegression, "trigram_lr_noise15");
    const double nb15 = trigram_auc(ctx, noisy, models::TrigramMode::kNaiveBayes, "trigram_nb_noise15");
    const auto deep = train_cpols(ctx, noisy, "cpols_noise15");
    Outcome o;
    o.pass = lr >= 0.85 && nb >= 0.85 && deep.auc >= std::max(lr15, nb15);
    o.detail = "default corpus LR AUC " + fmt(lr) + ", NB AUC " + fmt(nb) + " (>= 0.85); noise 0.15 CPoLS AUC " +
               fmt(deep.auc) + " vs LR " + fmt(lr15) + ", NB " + fmt(nb15);
    return o;
  });

  guarded(7, "determinism and persistence", [&] {
    require_model();
    // Probe: 64 test files through the in-memory model and its reloaded checkpoint.
    const fs::path ckpt = ctx.work / "cpols_default.ckpt";
    io::save_checkpoint(ckpt, *cpols->model, {});
    const auto loaded = io::load_checkpoint(ckpt);
    const auto& before = dynamic_cast<const models::SequenceClassifier&>(*cpols->model);
    const auto& after = dynamic_cast<const models::SequenceClassifier&>(*loaded.model);
    std::vector<std::vector<std::uint8_t>> probe;
    for (std::size_t i = 0; i < base->test.size() && probe.size() < 64; ++i) {
      auto bytes = data::read_file(base->test[i].path);
      if (bytes.size() > before.max_length()) bytes.resize(before.max_length());
      probe.push_back(std::move(bytes));
    }
    std::vector<std::span<const std::uint8_t>> views(probe.begin(), probe.end());
    const auto pa = before.predict(before.make_batch(views));
    const auto pb = after.predict(after.make_batch(views));
    const bool probe_ok = pa.size() == 64 && pa == pb;

    // Two identical training runs, then two evaluations.
    std::vector<std::string> ckpts, reports, rocs;
    for (const char* run : {"a", "b"}) {
      const fs::path c = ctx.work / (std::string("determinism_") + run + ".ckpt");
      const fs::path r = ctx.work / (std::string("determinism_") + run + ".json");
      if (run_cli(ctx, {"train", "--config", ctx.config.string(), "--manifest", base->manifest.string(), "--out",
                    c.string(), "--set", "max_epochs=2"}) != 0 ||
          run_cli(ctx, {"evaluate", "--config", ctx.config.string(), "--checkpoint", c.string(), "--manifest",
                    base->manifest.string(), "--out", r.string()}) != 0) {
        throw scriptnet::Error("determinism run " + std::string(run) + " failed");
      }
      ckpts.push_back(slurp(c));
      reports.push_back(slurp(r));
      rocs.push_back(slurp(fs::path(r).replace_extension(".roc.csv")));
    }
    Outcome o;
    const bool same_ckpt = ckpts[0] == ckpts[1] && !ckpts[0].empty();
    const bool same_report = reports[0] == reports[1] && rocs[0] == rocs[1] && !reports[0].empty();
    o.pass = probe_ok && same_ckpt && same_report;
    o.detail = std::string("probe of ") + std::to_string(pa.size()) + " files " +
               (probe_ok ? "bit-exact" : "DIFFERS") + " after reload; checkpoints " +
               (same_ckpt ? "byte-identical" : "DIFFER") + "; reports " + (same_report ? "byte-identical" : "DIFFER");
    return o;
  });

  guarded(8, "window policy on a late motif", [&] {
    require_model();
    const std::size_t window = cpols->model->window_length();
    const auto file = late_motif_file(window);
    const double first = models::predict_file(*cpols->model, file, models::WindowPolicy::kFirstWindow);
    const double best = models::predict_file(*cpols->model, file, models::WindowPolicy::kMaxOverWindows);
    Outcome o;
    o.pass = best - first > 0.3;
    o.detail = "first_window " + fmt(first) + ", max_over_windows " + fmt(best) + ", gap " + fmt(best - first) +
               " (> 0.3), file " + std::to_string(file.size()) + " bytes";
    return o;
  });

  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.pass; });
  std::cout << results.size() - static_cast<std::size_t>(failed) << " of " << results.size()
            << " criteria passed; log in " << (ctx.work / "acceptance.log").string() << std::endl;
  return failed == 0 ? 0 : 1;
}
