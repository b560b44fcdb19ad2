#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace circumfeas {

enum ExitCode : int {
  kExitOk = 0,
  kExitAuditViolation = 1,
  kExitUsage = 2,
  kExitSolverAbort = 3,
  kExitIo = 4,
};

/// Runs the command line with `args` (program name excluded), writing the
/// per-run summary lines to `out` and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace circumfeas
