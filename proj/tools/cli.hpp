#pragma once

#include <iosfwd>

namespace selmeta::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNotConverged = 3;

// Runs one selmeta command. The report (or plot CSV) goes to `out`, the
// human-readable summary and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace selmeta::cli
