#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wsnsync {

enum ExitCode : int {
    exit_ok = 0,
    exit_runtime_error = 1,
    exit_config_error = 2,
};

/// Entry point behind the `wsnsim` binary. `args` excludes the program name.
/// Subcommands: run, sweep, oracle, plot.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace wsnsync
