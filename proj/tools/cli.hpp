#pragma once

#include <string>
#include <vector>

namespace vsmrf::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kDataError = 2,
    kNotConverged = 3,
};

/// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args);

}  // namespace vsmrf::cli
