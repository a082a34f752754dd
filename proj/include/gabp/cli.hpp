#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gabp::cli {

enum ExitCode : int {
  kOk = 0,
  kDomainFailure = 1,
  kInputFailure = 2,
  kIterationBudget = 3,
  kDiverged = 4,
  kExistenceViolation = 5,
};

/// Runs the command line (args[0] is the program name). Reports go to out,
/// diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gabp::cli
