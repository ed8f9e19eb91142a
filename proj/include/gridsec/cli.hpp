#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridsec {

/// Exit codes: 0 success (secure / compliant), 2 negative verdict, 1 input or usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;

/// Runs one command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridsec
