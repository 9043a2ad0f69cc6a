#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace cycletrans::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingArtifact = 3,
  kBadData = 4,
  kTrainingFailed = 5,
};

/// Entry point shared by the binary and the tests. `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_environment());

}  // namespace cycletrans::cli
