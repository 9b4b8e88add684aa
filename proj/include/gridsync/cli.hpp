#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gridsync {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitCrossCheck = 3;

/// Entry point behind the `gridsync` executable. `args` excludes the program
/// name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridsync
