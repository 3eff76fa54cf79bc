#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace turnkit::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kInputParse = 3,
  kMissingCompanion = 4,
};

// Runs one command line (args excludes the program name). Diagnostics go to `err`,
// payloads written to stdout go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace turnkit::cli
