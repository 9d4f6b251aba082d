#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rootprobe::cli {

enum ExitCode : int {
  kSuccess = 0,
  kOperationalError = 1,
  kUsageError = 2,
  kRootedLeaning = 3,
};

/// Runs one subcommand. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rootprobe::cli
