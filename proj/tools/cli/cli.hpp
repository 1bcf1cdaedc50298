#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nelloc::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kFormat = 3, kIo = 4 };

// Runs one command line (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nelloc::cli
