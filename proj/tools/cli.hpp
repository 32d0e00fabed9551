#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace efg::cli {

/// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 2;  // bad flags, unreadable or corrupt input
inline constexpr int kNumericalAbort = 3;

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses a key=value config file into `--key=value` arguments. Blank lines
/// and lines starting with '#' are ignored. Throws InputError.
std::vector<std::string> read_config_args(const std::string& path);

}  // namespace efg::cli
