// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/data_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "scriptnet/errors.hpp"

namespace scriptnet::data {

namespace detail {
extern const char* const kMotifFileText;
}

namespace fs = std::filesystem;
using std::chrono::sys_days;

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Script-like background text.
class ScriptWriter {
 public:
  ScriptWriter(Rng& rng, double decoy_rate) : rng_(rng), decoy_rate_(decoy_rate) {}

  std::string statement(int depth = 0) {
    if (rng_.bernoulli(decoy_rate_)) return decoy();
    switch (rng_.below(depth > 0 ? 5 : 8)) {
      case 0:
        return "var " + ident() + " = " + expr(0) + ";\n";
      case 1:
        return ident() + "." + ident() + "(" + args() + ");\n";
      case 2:
        return ident() + " = " + expr(0) + ";\n";
      case 3:
        return "if (" + ident() + " " + pick(kCompare) + " " + number() + ") {\n  " + statement(depth + 1) + "}\n";
      case 4:
        return "// " + words() + "\n";
      case 5:
        return "function " + ident() + "(" + ident() + ", " + ident() + ") {\n  " + statement(depth + 1) +
               "  return " + expr(0) + ";\n}\n";
      case 6:
        return "for (var i = 0; i < " + number() + "; i++) {\n  " + ident() + "[i] = " + expr(0) + ";\n}\n";
      default:
        return "document." + pick(kDom) + "(" + string_literal() + ");\n";
    }
  }

 private:
  static constexpr std::array<const char*, 6> kCompare = {"<", ">", "==", "!=", "<=", ">="};
  static constexpr std::array<const char*, 5> kArith = {"+", "-", "*", "/", "%"};
  static constexpr std::array<const char*, 5> kDom = {"write", "getElementById", "createElement", "querySelector",
                                                      "addEventListener"};
  static constexpr std::array<const char*, 24> kSyllables = {"ba", "ce", "di", "fo", "gu", "ha", "je", "ki",
                                                             "lo", "mu", "na", "pe", "qi", "ro", "su", "ta",
                                                             "ve", "wi", "xo", "yu", "za", "tr", "st", "ch"};
  static constexpr std::array<const char*, 12> kWords = {"load", "the", "value", "update", "user", "page",
                                                         "config", "check", "item", "handler", "data", "init"};

  template <std::size_t N>
  std::string pick(const std::array<const char*, N>& options) {
    return options[rng_.below(N)];
  }

  std::string ident() {
    std::string s;
    const auto n = 1 + rng_.below(3);
    for (std::uint64_t i = 0; i < n; ++i) s += pick(kSyllables);
    if (rng_.bernoulli(0.3)) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
  }

  std::string number() { return std::to_string(rng_.below(1000)); }

  std::string hex_byte() {
    static constexpr char kHex[] = "0123456789abcdef";
    const auto v = rng_.below(256);
    return std::string("0x") + kHex[v >> 4] + kHex[v & 15];
  }

  std::string string_literal() { return "\"" + words() + "\""; }

  std::string words() {
    std::string s = pick(kWords);
    const auto n = rng_.below(4);
    for (std::uint64_t i = 0; i < n; ++i) s += std::string(" ") + pick(kWords);
    return s;
  }

  std::string args() {
    std::string s;
    const auto n = rng_.below(3);
    for (std::uint64_t i = 0; i < n; ++i) s += (i ? ", " : "") + expr(1);
    return s;
  }

  std::string expr(int depth) {
    switch (rng_.below(depth > 1 ? 3 : 5)) {
      case 0:
        return ident();
      case 1:
        return number();
      case 2:
        return string_literal();
      case 3:
        return ident() + "." + ident() + "(" + args() + ")";
      default:
        return expr(depth + 1) + " " + pick(kArith) + " " + expr(depth + 1);
    }
  }

  // Statements sharing pieces with the default motif without containing it.
  std::string decoy() {
    switch (rng_.below(4)) {
      case 0:
        return "var " + ident() + " = String.fromCharCode(" + hex_byte() + ", " + hex_byte() + ");\n";
      case 1:
        return "eval(" + ident() + ");\n";
      case 2:
        return ident() + " = eval(\"" + words() + "\");\n";
      default:
        return ident() + "(String." + ident() + "(" + hex_byte() + "));\n";
    }
  }

  Rng& rng_;
  double decoy_rate_;
};

std::uint64_t fnv1a64(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Date parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw ConfigError("date '" + text + "' is not YYYY-MM-DD");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw ConfigError("date '" + text + "' does not exist");
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) {
    line_no = 1;
    fail("missing header path,label,timestamp");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv(line) != std::vector<std::string>{"path", "label", "timestamp"}) {
    fail("header must be path,label,timestamp");
  }
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) fail("expected 3 fields, found " + std::to_string(fields.size()));
    ManifestEntry e;
    e.path = fields[0];
    if (e.path.empty()) fail("empty path");
    if (fields[1] == "1") {
      e.label = 1;
    } else if (fields[1] == "0") {
      e.label = 0;
    } else {
      fail("label '" + fields[1] + "' is not 0 or 1");
    }
    try {
      e.timestamp = parse_date(fields[2]);
    } catch (const ConfigError& err) {
      fail(err.what());
    }
    if (!seen.insert(e.path).second) fail("duplicate path '" + e.path + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const fs::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + manifest.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto entries = parse_manifest(text, manifest.string());
  const fs::path base = manifest.parent_path();
  std::vector<std::string> missing;
  for (auto& e : entries) {
    fs::path p(e.path);
    if (p.is_relative()) p = base / p;
    e.path = p.lexically_normal().string();
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) missing.push_back(e.path);
  }
  if (!missing.empty()) {
    std::string msg = "manifest lists " + std::to_string(missing.size()) + " unreadable file(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " ...";
    throw IoError(msg);
  }
  return entries;
}

void write_manifest(const fs::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + manifest.string());
  out << "path,label,timestamp\n";
  for (const auto& e : entries) out << e.path << ',' << e.label << ',' << format_date(e.timestamp) << '\n';
  if (!out) throw IoError("failed writing manifest " + manifest.string());
}

void SplitSpec::validate() const {
  for (const auto* r : {&train, &validation, &test}) {
    if (!r->first.ok() || !r->last.ok() || r->last < r->first) throw ConfigError("split date range is inverted");
  }
  if (!(train.last < validation.first) || !(validation.last < test.first)) {
    throw ConfigError("split date ranges overlap or are out of order");
  }
}

Splits split_by_time(const std::vector<ManifestEntry>& entries, const SplitSpec& spec) {
  spec.validate();
  Splits out;
  for (const auto& e : entries) {
    if (spec.train.contains(e.timestamp)) {
      out.train.push_back(e);
    } else if (spec.validation.contains(e.timestamp)) {
      out.validation.push_back(e);
    } else if (spec.test.contains(e.timestamp)) {
      out.test.push_back(e);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

const std::vector<std::string>& default_motifs() {
  static const std::vector<std::string> motifs = [] {
    std::vector<std::string> out;
    std::istringstream in(detail::kMotifFileText);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      out.push_back(line);
    }
    return out;
  }();
  return motifs;
}

const std::vector<std::string>& SyntheticSpec::motif_set() const { return motifs.empty() ? default_motifs() : motifs; }

void SyntheticSpec::validate() const {
  if (num_files < 1) throw ConfigError("num_files must be positive");
  if (min_length < 1 || max_length < min_length) throw ConfigError("need 1 <= min_length <= max_length");
  if (!(malware_ratio > 0.0 && malware_ratio < 1.0)) throw ConfigError("malware_ratio must lie in (0, 1)");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw ConfigError("noise_rate must lie in [0, 1]");
  if (!(decoy_rate >= 0.0 && decoy_rate <= 1.0)) throw ConfigError("decoy_rate must lie in [0, 1]");
  if (!(train_fraction > 0.0 && validation_fraction > 0.0 && train_fraction + validation_fraction < 1.0)) {
    throw ConfigError("train and validation fractions must be positive and leave room for a test split");
  }
  const auto& set = motif_set();
  if (set.empty()) throw ConfigError("motif set is empty");
  std::size_t longest = 0;
  for (const auto& m : set) {
    if (m.empty()) throw ConfigError("empty motif");
    longest = std::max(longest, m.size());
  }
  if (min_length < longest) {
    throw ConfigError("min_length " + std::to_string(min_length) + " is shorter than the longest motif (" +
                      std::to_string(longest) + " bytes)");
  }
  if (insertions < 1) throw ConfigError("insertions must be positive");
  if (insertions * longest > min_length) throw ConfigError("insertions do not fit in min_length bytes");
  dates.validate();
}

namespace {
constexpr std::array<const char*, 18> kSyntheticKeys = {
    "num_files",      "min_length",     "max_length",      "malware_ratio",  "insertions",
    "noise_rate",     "background",     "decoy_rate",      "corpus_seed",    "train_fraction",
    "validation_fraction", "train_from", "train_to",       "validation_from", "validation_to",
    "test_from",      "test_to",        "motif_file"};
}

bool SyntheticSpec::is_key(const std::string& key) {
  return std::find(kSyntheticKeys.begin(), kSyntheticKeys.end(), key) != kSyntheticKeys.end();
}

ConfigMap SyntheticSpec::to_map() const {
  return {{"num_files", std::to_string(num_files)},
          {"min_length", std::to_string(min_length)},
          {"max_length", std::to_string(max_length)},
          {"malware_ratio", format_double(malware_ratio)},
          {"insertions", std::to_string(insertions)},
          {"noise_rate", format_double(noise_rate)},
          {"background", background == Background::kScript ? "script" : "uniform"},
          {"decoy_rate", format_double(decoy_rate)},
          {"corpus_seed", std::to_string(seed)},
          {"train_fraction", format_double(train_fraction)},
          {"validation_fraction", format_double(validation_fraction)},
          {"train_from", format_date(dates.train.first)},
          {"train_to", format_date(dates.train.last)},
          {"validation_from", format_date(dates.validation.first)},
          {"validation_to", format_date(dates.validation.last)},
          {"test_from", format_date(dates.test.first)},
          {"test_to", format_date(dates.test.last)}};
}

SyntheticSpec SyntheticSpec::from_map(const ConfigMap& map) {
  SyntheticSpec s;
  read_key(map, "num_files", s.num_files);
  read_key(map, "min_length", s.min_length);
  read_key(map, "max_length", s.max_length);
  read_key(map, "malware_ratio", s.malware_ratio);
  read_key(map, "insertions", s.insertions);
  read_key(map, "noise_rate", s.noise_rate);
  read_key(map, "decoy_rate", s.decoy_rate);
  read_key(map, "corpus_seed", s.seed);
  read_key(map, "train_fraction", s.train_fraction);
  read_key(map, "validation_fraction", s.validation_fraction);
  if (auto it = map.find("background"); it != map.end()) {
    if (it->second == "script") {
      s.background = Background::kScript;
    } else if (it->second == "uniform") {
      s.background = Background::kUniform;
    } else {
      throw ConfigError("background must be 'script' or 'uniform', got '" + it->second + "'");
    }
  }
  const std::pair<const char*, Date*> dates[] = {
      {"train_from", &s.dates.train.first},           {"train_to", &s.dates.train.last},
      {"validation_from", &s.dates.validation.first}, {"validation_to", &s.dates.validation.last},
      {"test_from", &s.dates.test.first},             {"test_to", &s.dates.test.last}};
  for (const auto& [key, target] : dates) {
    if (auto it = map.find(key); it != map.end()) *target = parse_date(it->second);
  }
  if (auto it = map.find("motif_file"); it != map.end()) {
    std::ifstream in(it->second, std::ios::binary);
    if (!in) throw ConfigError("cannot read motif_file " + it->second);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      s.motifs.push_back(line);
    }
    if (s.motifs.empty()) throw ConfigError("motif_file " + it->second + " holds no motifs");
  }
  return s;
}

std::vector<std::uint8_t> make_background(std::size_t length, Background kind, double decoy_rate, Rng& rng) {
  std::vector<std::uint8_t> out;
  out.reserve(length + 256);
  if (kind == Background::kUniform) {
    for (std::size_t i = 0; i < length; ++i) out.push_back(static_cast<std::uint8_t>(rng.below(256)));
    return out;
  }
  ScriptWriter writer(rng, decoy_rate);
  while (out.size() < length) {
    const std::string s = writer.statement();
    out.insert(out.end(), s.begin(), s.end());
  }
  out.resize(length);
  return out;
}

std::vector<std::size_t> plant_motifs(std::vector<std::uint8_t>& bytes, const std::vector<std::string>& motifs,
                                      std::size_t count, double noise_rate, Rng& rng) {
  std::vector<const std::string*> chosen;
  std::size_t total = 0;
  for (std::size_t i = 0; i < count; ++i) {
    chosen.push_back(&motifs[rng.below(motifs.size())]);
    total += chosen.back()->size();
  }
  if (total > bytes.size()) throw ConfigError("motifs do not fit in the file");
  // Sorted gaps placed between the motifs keep the copies disjoint.
  const std::size_t slack = bytes.size() - total;
  std::vector<std::size_t> gaps(count);
  for (auto& g : gaps) g = static_cast<std::size_t>(rng.below(slack + 1));
  std::sort(gaps.begin(), gaps.end());
  std::vector<std::size_t> offsets;
  std::size_t used = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = gaps[i] + used;
    const std::string& motif = *chosen[i];
    for (std::size_t k = 0; k < motif.size(); ++k) {
      auto b = static_cast<std::uint8_t>(motif[k]);
      if (noise_rate > 0.0 && rng.bernoulli(noise_rate)) {
        b = static_cast<std::uint8_t>((b + 1 + rng.below(255)) & 0xff);
      }
      bytes[at + k] = b;
    }
    offsets.push_back(at);
    used += motif.size();
  }
  return offsets;
}

bool contains_any(const std::vector<std::uint8_t>& bytes, const std::vector<std::string>& motifs) {
  for (const auto& m : motifs) {
    if (std::search(bytes.begin(), bytes.end(), m.begin(), m.end()) != bytes.end()) return true;
  }
  return false;
}

GeneratedCorpus generate_synthetic_corpus(const SyntheticSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const auto& motifs = spec.motif_set();
  const std::size_t n = spec.num_files;
  Rng master(spec.seed);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Rng label_rng = master.fork();
  const auto n_mal = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.malware_ratio));
  label_rng.shuffle(std::span<std::size_t>(order));
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n_mal; ++i) labels[order[i]] = 1;

  Rng split_rng = master.fork();
  std::iota(order.begin(), order.end(), std::size_t{0});
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.validation_fraction));
  std::vector<int> split(n, 2);
  for (std::size_t i = 0; i < n; ++i) split[order[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);

  std::error_code ec;
  fs::create_directories(out_dir / "files", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "files").string() + ": " + ec.message());

  GeneratedCorpus out;
  out.manifest = out_dir / "manifest.csv";
  const DateRange* ranges[3] = {&spec.dates.train, &spec.dates.validation, &spec.dates.test};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = master.fork();
    const std::size_t length = spec.min_length + static_cast<std::size_t>(rng.below(spec.max_length - spec.min_length + 1));
    std::vector<std::uint8_t> bytes;
    do {
      bytes = make_background(length, spec.background, spec.decoy_rate, rng);
    } while (contains_any(bytes, motifs));
    if (labels[i] == 1) plant_motifs(bytes, motifs, spec.insertions, spec.noise_rate, rng);

    const DateRange& range = *ranges[split[i]];
    const auto first = sys_days(range.first).time_since_epoch().count();
    const auto span_days = sys_days(range.last).time_since_epoch().count() - first;
    const auto day = first + static_cast<long>(rng.below(static_cast<std::uint64_t>(span_days) + 1));
    const Date date{sys_days(std::chrono::days(day))};

    char name[32];
    std::snprintf(name, sizeof name, "files/f%06zu.js", i);
    std::ofstream f(out_dir / name, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + (out_dir / name).string());
    out.entries.push_back({name, labels[i], date});
    out.malicious += static_cast<std::size_t>(labels[i]);
    ++out.per_split[split[i]];
  }
  write_manifest(out.manifest, out.entries);
  return out;
}

std::string corpus_digest(const fs::path& root) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.emplace_back(fs::relative(e.path(), root).generic_string(), e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [rel, path] : files) {
    const auto bytes = read_file(path);
    h = fnv1a64(h, rel);
    h = fnv1a64(h, std::string_view("\0", 1));
    h = fnv1a64(h, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    h = fnv1a64(h, std::string_view("\0", 1));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

Dataset load_samples(const std::vector<ManifestEntry>& entries, std::size_t max_length) {
  Dataset out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s{e.path, read_file(e.path), e.label};
    if (max_length > 0 && s.bytes.size() > max_length) s.bytes.resize(max_length);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace scriptnet::data
