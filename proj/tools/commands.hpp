#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace romsram::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kThreshold = 2, kInfeasible = 3 };

/// Runs the command line `args` (args[0] is the program name). Messages go
/// to `out` and `err`; result files go to the configured output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace romsram::cli
