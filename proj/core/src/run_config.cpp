// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/run_config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include "scriptnet/errors.hpp"
#include "scriptnet/models.hpp"

namespace scriptnet {

namespace {

constexpr std::array<const char*, 8> kTrainKeys = {"max_epochs", "minibatch_size", "patience", "seed",
                                                   "learning_rate", "beta1", "beta2", "epsilon"};
constexpr std::array<const char*, 6> kRunKeys = {"model",       "threshold",     "window_policy",
                                                 "fpr_targets", "trigram_alpha", "trigram_calibrate"};

bool in(const auto& list, const std::string& key) {
  return std::find(list.begin(), list.end(), key) != list.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool RunConfig::is_known_key(const std::string& key) {
  static const ConfigMap cpols = models::CPoLSConfig{}.to_map();
  static const ConfigMap lamp = models::LaMPConfig{}.to_map();
  return cpols.count(key) || lamp.count(key) || in(kTrainKeys, key) || in(kRunKeys, key) ||
         data::SyntheticSpec::is_key(key);
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + "expected 'key = value'");
    if (!is_known_key(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (!cfg.values_.emplace(key, value).second) throw ConfigError(where + "key '" + key + "' repeated");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

ConfigMap RunConfig::model_map(const std::string& kind) const {
  ConfigMap known;
  if (kind == "cpols") {
    known = models::CPoLSConfig{}.to_map();
  } else if (kind == "lamp") {
    known = models::LaMPConfig{}.to_map();
  } else {
    known = {{"trigram_alpha", ""}};
  }
  ConfigMap out;
  for (const auto& [k, v] : values_) {
    if (known.count(k)) out[k] = v;
  }
  return out;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig c;
  read_key(values_, "max_epochs", c.max_epochs);
  read_key(values_, "minibatch_size", c.minibatch_size);
  read_key(values_, "patience", c.patience);
  read_key(values_, "seed", c.seed);
  read_key(values_, "learning_rate", c.adam.learning_rate);
  read_key(values_, "beta1", c.adam.beta1);
  read_key(values_, "beta2", c.adam.beta2);
  read_key(values_, "epsilon", c.adam.epsilon);
  c.validate();
  return c;
}

models::TrigramOptions RunConfig::trigram_options() const {
  const auto t = train_config();
  models::TrigramOptions o;
  o.epochs = t.max_epochs;
  o.minibatch_size = t.minibatch_size;
  o.adam = t.adam;
  o.seed = t.seed;
  read_key(values_, "trigram_alpha", o.alpha);
  read_key(values_, "trigram_calibrate", o.calibrate);
  return o;
}

data::SyntheticSpec RunConfig::synthetic_spec() const { return data::SyntheticSpec::from_map(values_); }

}  // namespace scriptnet
