#pragma once

#include <ostream>

namespace toporel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitItemErrors = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;

/// Runs one `toporel` invocation; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace toporel::cli
