// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scriptnet::cli {

enum ExitCode : int {
  kOk = 0,
  kPartialFailure = 1,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

// Runs one command line (args[0] is the program name). Normal output goes to
// `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scriptnet::cli
