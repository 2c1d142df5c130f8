#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mist::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

// Runs one command line (without the program name). Results go to `out`; failures
// are reported on `err` as a single JSON object and mapped to an exit code.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mist::cli
