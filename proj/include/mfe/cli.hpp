#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfe::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kParse = 3,
  kValidation = 4,
  kResource = 5,
};

// Entry point of the `mfe` tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfe::cli
