// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/errors.hpp"
#include "scriptnet/models.hpp"
#include "scriptnet/trigram.hpp"

namespace scriptnet::models {

std::unique_ptr<Model> make_model(const std::string& kind, const ConfigMap& config, std::uint64_t init_seed) {
  if (kind == "cpols") return std::make_unique<CPoLSModel>(CPoLSConfig::from_map(config), init_seed);
  if (kind == "lamp") return std::make_unique<LaMPModel>(LaMPConfig::from_map(config), init_seed);
  if (kind == "trigram-lr" || kind == "trigram-nb") {
    double alpha = 1.0;
    for (const auto& [k, v] : config) {
      if (k != "trigram_alpha") throw ConfigError("unknown " + kind + " setting '" + k + "'");
    }
    read_key(config, "trigram_alpha", alpha);
    return std::make_unique<TrigramModel>(
        kind == "trigram-lr" ? TrigramMode::kLogisticRegression : TrigramMode::kNaiveBayes, alpha);
  }
  throw ConfigError("unknown model kind '" + kind + "' (expected cpols, lamp, trigram-lr or trigram-nb)");
}

}  // namespace scriptnet::models
