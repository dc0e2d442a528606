#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mjls {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitNotStable = 2,
    kExitNoConvergence = 3,
};

/// Entry point of the `mjls` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mjls
