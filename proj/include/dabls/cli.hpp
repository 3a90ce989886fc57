#ifndef DABLS_CLI_HPP
#define DABLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace dabls {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Runs one subcommand (train, predict, bench, grid, sweep, inspect). `args` excludes
/// the program name. Tabular data goes to `out` (or --out), progress to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dabls

#endif  // DABLS_CLI_HPP
