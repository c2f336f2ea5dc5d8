// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/config_map.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "scriptnet/errors.hpp"

namespace scriptnet {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

}  // namespace

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "a non-negative integer");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_double(const std::string& key, const std::string& value) {
  if (value.empty()) bad_value(key, value, "a number");
  char* end = nullptr;
  errno = 0;
  const double out = std::strtod(value.c_str(), &end);
  if (errno != 0 || end != value.c_str() + value.size() || !std::isfinite(out)) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "true or false");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void read_key(const ConfigMap& map, const std::string& key, double& target) {
  if (auto it = map.find(key); it != map.end()) target = parse_double(key, it->second);
}

void read_key(const ConfigMap& map, const std::string& key, bool& target) {
  if (auto it = map.find(key); it != map.end()) target = parse_bool(key, it->second);
}

void read_key(const ConfigMap& map, const std::string& key, std::string& target) {
  if (auto it = map.find(key); it != map.end()) target = it->second;
}

}  // namespace scriptnet
