#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nextpp {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitNumeric = 3,
};

// Runs `nextpp <command> ...`; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nextpp
