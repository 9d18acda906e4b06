#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace harass::cli {

/// Runs one command line (args excludes the program name). Returns the
/// process exit code: 0 ok, 2 config error, 3 data error, 4 numeric failure.
/// Errors are written to err as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace harass::cli
