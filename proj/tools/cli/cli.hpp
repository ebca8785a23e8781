#pragma once

namespace nplab::cli {

/// Parses the command line, runs one subcommand and returns the exit code:
/// 0 success, 2 configuration or usage error, 3 numeric abort, 4 I/O error.
int run_cli(int argc, const char* const* argv);

}  // namespace nplab::cli
