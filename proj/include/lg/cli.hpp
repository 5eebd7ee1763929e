#pragma once

#include <string>
#include <vector>

namespace lg {

/// Entry point of the command-line tool; argv-style arguments without the
/// program name.  Returns the process exit code (0 ok, 2 validation,
/// 3 infeasibility, 4 resource cap).
int run_cli(const std::vector<std::string>& args);

}  // namespace lg
