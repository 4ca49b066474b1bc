// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sfc::cli {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConfig = 3,
  kFormat = 4,
  kValidation = 5,
  kNumeric = 6,
  kInternal = 1,
};

// Runs one command; `args` excludes the program name. Reports go to `out`;
// failures print one JSON error record to `err` and return nonzero.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sfc::cli
