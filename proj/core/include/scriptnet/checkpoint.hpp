// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Binary model checkpoints.
//
// Layout: "CPLS" | u32 version | u64 header bytes | JSON header |
// little-endian f32 payload, parameters in header order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "scriptnet/config_map.hpp"
#include "scriptnet/models.hpp"

namespace scriptnet::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  double threshold = 0.5;  // verdict threshold used by predict
  std::map<std::string, double> metrics;
};

struct LoadedCheckpoint {
  std::unique_ptr<models::Model> model;
  CheckpointMeta meta;
};

std::string serialize_checkpoint(const models::Model& model, const CheckpointMeta& meta);
// IntegrityError on bad magic, truncation, trailing bytes or a parameter whose
// declared shape disagrees with the rebuilt model; Error on a version
// mismatch. Nothing partial is returned.
LoadedCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const models::Model& model, const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scriptnet::io
