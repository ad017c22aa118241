#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qsb::cli {

enum ExitCode : int { kOk = 0, kTestFailed = 1, kConfigError = 2, kNumericFailure = 3 };

/// Entry point of the qsbrown tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace qsb::cli
