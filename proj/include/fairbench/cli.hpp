#ifndef FAIRBENCH_CLI_HPP
#define FAIRBENCH_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace fairbench {

/// Command-line entry point (run / table / tradeoff subcommands). Returns the
/// process exit status; diagnostics go to err. Exposed as a library function
/// so tests can drive the CLI without spawning processes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairbench

#endif  // FAIRBENCH_CLI_HPP
