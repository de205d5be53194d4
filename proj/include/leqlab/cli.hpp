#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace leq {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,  ///< unreadable config, validation failure, bad flags
    exit_blowup = 2,  ///< solver escape or overflow of every Monte Carlo path
    exit_verify = 3,  ///< a verification check failed
};

/// Runs one command: `args` excludes the program name, e.g.
/// {"solve", "--config", "bench.json", "--output-dir", "out"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace leq
