#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edskit::cli {

/// Exit codes of every subcommand.
enum Exit : int { kPass = 0, kFail = 1, kInputError = 2 };

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out` unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edskit::cli
