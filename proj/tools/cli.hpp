#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hrisk::cli {

/// Runs the `hrisk` command line with `args` (args[0] is the program name).
/// Requested artifacts go to `out`, diagnostics to `err`. Returns the exit
/// status: 0 success, 1 internal failure, 2 input or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hrisk::cli
