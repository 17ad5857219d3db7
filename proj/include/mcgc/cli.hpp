#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcgc::cli {

/// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 1;    ///< bad input, flags or contract violations
inline constexpr int exit_resource = 2; ///< memory or other resource limits

/// Runs one subcommand. `args` excludes the program name. Data goes to
/// files or `out`, diagnostics and the run manifest to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

} // namespace mcgc::cli
