#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bintensor::cli {

// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Runs the command line `args` (without the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bintensor::cli
