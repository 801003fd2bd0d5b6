#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace subseg::cli {

/// Runs one command line (without the program name). Returns the process exit code:
/// 0 success, 1 usage, 2 data/validation, 3 I/O.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subseg::cli
