#pragma once

#include <string>
#include <vector>

namespace nlaid::cli {

enum ExitCode : int { ok = 0, config_error = 1, solver_error = 2, io_error = 3 };

/// Parses argv-style arguments (without the program name) and runs the
/// requested subcommand. Diagnostics go to stderr, summaries to stdout.
int run(const std::vector<std::string>& args);

}  // namespace nlaid::cli
