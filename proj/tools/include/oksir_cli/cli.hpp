#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace oksir::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Runs the oksir command line. args excludes the program name. `in` backs the "-" path.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace oksir::cli
