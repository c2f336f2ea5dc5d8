// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Run configuration files: "key = value" lines, '#' starts a comment.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scriptnet/config_map.hpp"
#include "scriptnet/data_io.hpp"
#include "scriptnet/training.hpp"
#include "scriptnet/trigram.hpp"

namespace scriptnet {

class RunConfig {
 public:
  RunConfig() = default;

  // ConfigError with the line number for malformed lines, repeated keys and
  // unknown keys.
  static RunConfig parse(const std::string& text, const std::string& source = "config");
  static RunConfig load(const std::filesystem::path& path);

  static bool is_known_key(const std::string& key);

  // Overrides one value, e.g. from a command-line flag.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  const ConfigMap& values() const { return values_; }

  // Settings understood by make_model for `kind`.
  ConfigMap model_map(const std::string& kind) const;
  train::TrainConfig train_config() const;
  models::TrigramOptions trigram_options() const;
  data::SyntheticSpec synthetic_spec() const;

 private:
  ConfigMap values_;
};

}  // namespace scriptnet
