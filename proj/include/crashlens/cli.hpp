#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crashlens {

/// Runs the command line `args` (args[0] is the program name). Returns the
/// exit code: 0 success, 1 data error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crashlens
