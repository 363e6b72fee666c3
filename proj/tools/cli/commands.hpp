#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sirtnet::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sirtnet::cli
