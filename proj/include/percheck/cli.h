#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "percheck/error.h"

namespace percheck::cli {

enum ExitCode : int {
    kOk = 0,
    kFailed = 1,  // verify-controller found violations
    kUsage = 2,
    kParse = 3,
    kConfig = 4,
    kEngine = 5,
    kIo = 6,
};

int exit_code_for(Errc code) noexcept;

/// Runs one command line (without the program name). Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace percheck::cli
