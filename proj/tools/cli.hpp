#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcl::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Runs the command line `args` (without the program name) and returns the
/// exit code. Subcommands: generate, train, compare.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dcl::cli
