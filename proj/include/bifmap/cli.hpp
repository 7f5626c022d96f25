#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bifmap {

// Process exit statuses of the command-line front end.
enum ExitStatus : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitQuadrature = 2,
  kExitAdmissibility = 3,
  kExitPartialSweep = 4,
  kExitFitFail = 5,
  kExitVerifyFail = 6,
};

/// Runs one invocation: args holds everything after the program name,
/// starting with the subcommand (eval, sweep, fit, verify). Results go to
/// out, diagnostics to err; files named by flags are written only after all
/// computation has finished.
///
/// `--config FILE` reads flat `key = value` lines; each key names a flag
/// without its leading dashes (`rel_tol` and `rel-tol` both work), and flags
/// given on the command line win. A key no subcommand knows is a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bifmap
