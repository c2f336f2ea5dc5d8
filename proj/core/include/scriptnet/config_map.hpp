// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

namespace scriptnet {

// Flat string key/value settings, as read from run configs and stored in
// checkpoint headers.
using ConfigMap = std::map<std::string, std::string>;

std::size_t parse_size(const std::string& key, const std::string& value);
std::uint64_t parse_u64(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

// Shortest text that parses back to the same double.
std::string format_double(double value);

// Overwrites `target` with the value under `key` when present.
template <std::unsigned_integral T>
  requires(!std::same_as<T, bool>)
void read_key(const ConfigMap& map, const std::string& key, T& target) {
  if (auto it = map.find(key); it != map.end()) target = static_cast<T>(parse_u64(key, it->second));
}
void read_key(const ConfigMap& map, const std::string& key, double& target);
void read_key(const ConfigMap& map, const std::string& key, bool& target);
void read_key(const ConfigMap& map, const std::string& key, std::string& target);

}  // namespace scriptnet
