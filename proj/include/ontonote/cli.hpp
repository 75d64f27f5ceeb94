#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ontonote {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitUsage = 2, kExitIo = 3 };

/// Runs one command. `args` excludes the program name. Machine output goes
/// to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ontonote
