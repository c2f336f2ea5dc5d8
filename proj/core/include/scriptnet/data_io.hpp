// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Labeled corpus manifests, date-based train/validation/test splits and the
// synthetic planted-motif corpus generator.

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scriptnet/config_map.hpp"
#include "scriptnet/dataset.hpp"
#include "scriptnet/random.hpp"

namespace scriptnet::data {

using Date = std::chrono::year_month_day;

// Strict YYYY-MM-DD. Throws ConfigError.
Date parse_date(const std::string& text);
std::string format_date(Date date);

struct ManifestEntry {
  std::string path;
  int label = 0;  // 1 = malicious
  Date timestamp;
};

// CSV with header "path,label,timestamp". Relative paths are resolved against
// the manifest's directory. Malformed rows raise DataError naming the line,
// duplicate paths are rejected and unreadable files raise IoError.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest);
// Parses manifest text without touching the file system.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& source = "manifest");
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

struct DateRange {
  Date first;
  Date last;  // inclusive

  bool contains(Date d) const { return first <= d && d <= last; }
};

struct SplitSpec {
  DateRange train{Date{std::chrono::year{2017}, std::chrono::month{9}, std::chrono::day{14}},
                  Date{std::chrono::year{2017}, std::chrono::month{12}, std::chrono::day{28}}};
  DateRange validation{Date{std::chrono::year{2017}, std::chrono::month{12}, std::chrono::day{29}},
                       Date{std::chrono::year{2018}, std::chrono::month{2}, std::chrono::day{1}}};
  DateRange test{Date{std::chrono::year{2018}, std::chrono::month{2}, std::chrono::day{2}},
                 Date{std::chrono::year{2018}, std::chrono::month{3}, std::chrono::day{3}}};

  // ConfigError unless each range is ordered and train < validation < test
  // without overlap.
  void validate() const;
};

struct Splits {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> validation;
  std::vector<ManifestEntry> test;
  std::size_t dropped = 0;  // entries outside every range
};

Splits split_by_time(const std::vector<ManifestEntry>& entries, const SplitSpec& spec);

enum class Background {
  kScript,   // printable, script-like statements
  kUniform,  // uniform random bytes
};

struct SyntheticSpec {
  std::size_t num_files = 5000;
  std::size_t min_length = 2000;
  std::size_t max_length = 60000;
  double malware_ratio = 0.8476;
  std::vector<std::string> motifs;  // empty selects default_motifs()
  std::size_t insertions = 1;
  // Probability that each planted motif byte is replaced by a different byte.
  double noise_rate = 0.05;
  Background background = Background::kScript;
  // Per-statement probability of script background emitting a statement that
  // shares substrings with the default motif.
  double decoy_rate = 0.002;
  std::uint64_t seed = 7;
  double train_fraction = 0.60;
  double validation_fraction = 0.15;
  SplitSpec dates;

  const std::vector<std::string>& motif_set() const;
  void validate() const;

  ConfigMap to_map() const;
  // Reads the generator keys present in `map` and ignores the rest.
  static SyntheticSpec from_map(const ConfigMap& map);
  static bool is_key(const std::string& key);
};

// Motifs shipped in the versioned data file.
const std::vector<std::string>& default_motifs();

// Background bytes of exactly `length` bytes.
std::vector<std::uint8_t> make_background(std::size_t length, Background kind, double decoy_rate, Rng& rng);

// Overwrites `count` non-overlapping copies of randomly chosen motifs at
// uniform offsets, corrupting each planted byte with probability noise_rate.
// Returns the offsets, ascending.
std::vector<std::size_t> plant_motifs(std::vector<std::uint8_t>& bytes, const std::vector<std::string>& motifs,
                                      std::size_t count, double noise_rate, Rng& rng);

bool contains_any(const std::vector<std::uint8_t>& bytes, const std::vector<std::string>& motifs);

struct GeneratedCorpus {
  std::filesystem::path manifest;
  std::vector<ManifestEntry> entries;  // paths relative to the output directory
  std::size_t malicious = 0;
  std::size_t per_split[3] = {0, 0, 0};
};

// Writes files/fNNNNNN.js and manifest.csv under out_dir.
GeneratedCorpus generate_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

// FNV-1a 64 chain over (relative path, content) of every regular file under
// root in lexicographic path order, as 16 hex digits.
std::string corpus_digest(const std::filesystem::path& root);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Loads file bytes, truncated to max_length when it is nonzero.
Dataset load_samples(const std::vector<ManifestEntry>& entries, std::size_t max_length = 0);

}  // namespace scriptnet::data
