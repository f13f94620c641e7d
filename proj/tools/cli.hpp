#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctp::cli {

/// Parses `args` (without the program name) and runs one subcommand.
/// Returns 0 on success, 2 on usage errors, 1 on any other failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctp::cli
