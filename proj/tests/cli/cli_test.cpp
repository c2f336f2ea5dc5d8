// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "scriptnet/checkpoint.hpp"
#include "scriptnet/data_io.hpp"
#include "scriptnet/evaluation.hpp"
#include "scriptnet_cli/commands.hpp"

namespace scriptnet::testing {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "scriptnet");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string digest_line(const std::string& out) {
  std::smatch m;
  return std::regex_search(out, m, std::regex("digest ([0-9a-f]{16})")) ? m[1].str() : "";
}

const std::vector<std::string> kTinyCorpus = {"--set", "num_files=60", "--set", "min_length=100", "--set",
                                              "max_length=400"};
const std::vector<std::string> kTinyModel = {
    "--set", "max_sequence_length=128", "--set", "chunk_len=32",  "--set", "embedding_dim=4",
    "--set", "cnn_window=4",            "--set", "cnn_stride=2",  "--set", "cnn_filters=4",
    "--set", "lstm_hidden=4",           "--set", "max_epochs=2",  "--set", "minibatch_size=10"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// One tiny corpus and checkpoint shared by the tests in this suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "scriptnet_cli_test";
    fs::remove_all(root_);
    const auto gen = run(cat({"gen-synth", "--out", (root_ / "corpus").string()}, kTinyCorpus));
    ASSERT_EQ(gen.code, 0) << gen.err;
    const auto train = run(cat({"train", "--manifest", manifest().string(), "--out", ckpt().string()}, kTinyModel));
    ASSERT_EQ(train.code, 0) << train.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path manifest() { return root_ / "corpus" / "manifest.csv"; }
  static fs::path ckpt() { return root_ / "model.ckpt"; }
  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, GenSynthPrintsDigestAndSplits) {
  const auto r = run(cat({"gen-synth", "--out", (root_ / "again").string()}, kTinyCorpus));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(digest_line(r.out), data::corpus_digest(root_ / "corpus"));
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, std::regex("train (\\d+) validation (\\d+) test (\\d+)")));
  EXPECT_GT(std::stoi(m[1]), 0);
  EXPECT_GT(std::stoi(m[2]), 0);
  EXPECT_GT(std::stoi(m[3]), 0);
  const auto other = run(cat({"gen-synth", "--out", (root_ / "other").string(), "--seed", "99"}, kTinyCorpus));
  EXPECT_NE(digest_line(other.out), digest_line(r.out));
}

TEST_F(CliTest, GenSynthShortFilesExitTwo) {
  const auto r = run({"gen-synth", "--out", (root_ / "bad").string(), "--set", "min_length=10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("min_length"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainWritesLoadableCheckpointAndReport) {
  ASSERT_TRUE(fs::exists(ckpt()));
  EXPECT_TRUE(fs::exists(ckpt().string() + ".train.jsonl"));
  const auto loaded = io::load_checkpoint(ckpt());
  EXPECT_EQ(loaded.model->kind(), "cpols");
  EXPECT_EQ(loaded.model->config().at("lstm_hidden"), "4");
}

TEST_F(CliTest, RetrainIsByteIdentical) {
  const fs::path again = root_ / "again.ckpt";
  const auto r = run(cat({"train", "--manifest", manifest().string(), "--out", again.string()}, kTinyModel));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(again), slurp(ckpt()));
}

TEST_F(CliTest, TrigramModelsTrain) {
  for (const char* kind : {"trigram-lr", "trigram-nb"}) {
    const fs::path out = root_ / (std::string(kind) + ".ckpt");
    const auto r = run({"train", "--manifest", manifest().string(), "--model", kind, "--out", out.string(), "--set",
                        "max_epochs=2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::load_checkpoint(out).model->kind(), kind);
  }
}

TEST_F(CliTest, InvalidModelExitsTwoWithUsage) {
  const auto r = run({"train", "--manifest", manifest().string(), "--model", "svm", "--out", (root_ / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("svm"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("--model"), std::string::npos) << r.err;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"train", "--out", "x"}).code, 2);
  EXPECT_EQ(run({"train", "--manifest", manifest().string(), "--out", "x", "--set", "nonsense=1"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, EvaluateWritesReportFields) {
  const fs::path report = root_ / "eval" / "report.json";
  const auto r = run({"evaluate", "--checkpoint", ckpt().string(), "--manifest", manifest().string(), "--out",
                      report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto parsed = eval::report_from_json(slurp(report));
  EXPECT_GT(parsed.report.count, 0u);
  EXPECT_TRUE(parsed.report.auc.has_value());
  ASSERT_EQ(parsed.operating_points.size(), 3u);
  EXPECT_EQ(parsed.operating_points[0].target_fpr, 0.005);
  const auto curve = eval::roc_from_csv(slurp(root_ / "eval" / "report.roc.csv"));
  EXPECT_EQ(curve.points.back().tpr, 1.0);
  for (const char* field : {"Accuracy", "Precision", "Recall", "F1", "AUC", "TPR"}) {
    EXPECT_NE(r.out.find(field), std::string::npos) << field;
  }

  // Same checkpoint, same report.
  const fs::path second = root_ / "eval" / "second.json";
  run({"evaluate", "--checkpoint", ckpt().string(), "--manifest", manifest().string(), "--out", second.string()});
  EXPECT_EQ(slurp(second), slurp(report));
}

TEST_F(CliTest, EvaluateFullBudgetGivesFullTpr) {
  const fs::path report = root_ / "full.json";
  const auto r = run({"evaluate", "--checkpoint", ckpt().string(), "--manifest", manifest().string(), "--out",
                      report.string(), "--fpr-targets", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto parsed = eval::report_from_json(slurp(report));
  ASSERT_EQ(parsed.operating_points.size(), 1u);
  EXPECT_EQ(parsed.operating_points[0].tpr, 1.0);
}

TEST_F(CliTest, SingleClassSplitExitsThree) {
  // Keep only the malicious test entries.
  auto entries = data::load_manifest(manifest());
  std::erase_if(entries, [](const data::ManifestEntry& e) { return e.label == 0; });
  const fs::path m = root_ / "malicious_only.csv";
  data::write_manifest(m, entries);
  const auto r = run({"evaluate", "--checkpoint", ckpt().string(), "--manifest", m.string(), "--out",
                      (root_ / "single.json").string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(CliTest, CorruptCheckpointExitsThree) {
  const fs::path bad = root_ / "bad.ckpt";
  std::ofstream(bad) << "CPLS";
  const auto r = run({"predict", "--checkpoint", bad.string(), manifest().string()});
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, PredictLines) {
  const fs::path empty = root_ / "empty.js";
  std::ofstream(empty).close();
  const auto file = (root_ / "corpus" / data::load_manifest(manifest()).front().path).string();
  const auto r = run({"predict", "--checkpoint", ckpt().string(), empty.string(), file, file});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::regex line("(.*), (0\\.\\d{6}|1\\.000000), (malicious|benign)");
  std::istringstream in(r.out);
  std::vector<std::string> probs;
  std::string l;
  while (std::getline(in, l)) {
    std::smatch m;
    ASSERT_TRUE(std::regex_match(l, m, line)) << l;
    probs.push_back(m[2]);
  }
  ASSERT_EQ(probs.size(), 3u);
  EXPECT_EQ(probs[1], probs[2]);
}

TEST_F(CliTest, PredictUnreadableFileIsPartialFailure) {
  const auto file = (root_ / "corpus" / data::load_manifest(manifest()).front().path).string();
  const auto r = run({"predict", "--checkpoint", ckpt().string(), (root_ / "missing.js").string(), file});
  EXPECT_EQ(r.code, 1);
  std::istringstream in(r.out);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_NE(first.find("missing.js, error"), std::string::npos) << first;
  EXPECT_EQ(second.rfind(file + ", ", 0), 0u) << second;
}

TEST_F(CliTest, ThresholdOverridesVerdict) {
  const auto file = (root_ / "corpus" / data::load_manifest(manifest()).front().path).string();
  EXPECT_NE(run({"predict", "--checkpoint", ckpt().string(), "--threshold", "0", file}).out.find("malicious"),
            std::string::npos);
  EXPECT_NE(run({"predict", "--checkpoint", ckpt().string(), "--threshold", "1.01", file}).out.find("benign"),
            std::string::npos);
}

TEST_F(CliTest, ReportSummarizes) {
  const fs::path report = root_ / "rep" / "r.json";
  ASSERT_EQ(run({"evaluate", "--checkpoint", ckpt().string(), "--manifest", manifest().string(), "--out",
                 report.string()})
                .code,
            0);
  const auto r = run({"report", "--metrics", report.string(), "--roc", (root_ / "rep" / "r.roc.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("AUC (%)"), std::string::npos);
  EXPECT_NE(r.out.find("ROC points with FPR <= 2.0000%"), std::string::npos) << r.out;
  EXPECT_EQ(run({"report", "--metrics", (root_ / "nothing.json").string()}).code, 3);
}

}  // namespace
}  // namespace scriptnet::testing
