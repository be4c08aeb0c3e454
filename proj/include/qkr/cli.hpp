#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qkr {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitAborted = 2, kExitIo = 3 };

/// Entry point behind the `qkr` executable. `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qkr
