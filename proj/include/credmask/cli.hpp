#pragma once

#include "credmask/error.hpp"

#include <iosfwd>
#include <span>
#include <string>

namespace credmask::cli {

/// Process exit status. Scripts depend on these values; never renumber.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitAuth = 2,
    kExitBusy = 3,
    kExitTampered = 4,
    kExitConflict = 5,
};

int exit_code_for(ErrorCode code) noexcept;

/// Runs one command. `args` excludes the program name. Prompts and
/// diagnostics go to `err`; reports go to `out`; menu answers and (when no
/// terminal or --passphrase-fd is available) passphrases are read from `in`.
int run(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace credmask::cli
