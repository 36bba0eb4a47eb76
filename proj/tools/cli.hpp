#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfd::cli {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kContractViolation = 4,
  kFingerprintMismatch = 5,
};

// Runs the `lfd` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lfd::cli
