#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gaussbp::cli {

/// Exit codes shared by all subcommands.
enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kNotConverged = 2,
  kToleranceExceeded = 3,
};

/// Entry point of the `gaussbp` tool; `args` excludes the program name.
/// Results go to `out`, diagnostics (one JSON object per line) to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gaussbp::cli
