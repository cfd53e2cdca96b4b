#pragma once

#include <iosfwd>

namespace ttb::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMaxIters = 2;

/// Entry point of the `ttb` tool. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ttb::cli
