// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scriptnet {

// One labeled file held in memory. `bytes` may already be truncated to the
// model's maximum sequence length.
struct Sample {
  std::string name;
  std::vector<std::uint8_t> bytes;
  int label = 0;  // 1 = malicious, 0 = benign
};

using Dataset = std::vector<Sample>;

}  // namespace scriptnet
