#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sflow::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

/// Entry point shared by the binary and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sflow::cli
