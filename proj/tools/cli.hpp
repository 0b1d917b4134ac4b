#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pwrank::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

/// Runs the `pwrank` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pwrank::cli
