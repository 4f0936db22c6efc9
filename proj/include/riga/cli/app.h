#pragma once

#include <iosfwd>

namespace riga::cli {

/// Exit codes: 0 success, 1 usage or I/O, 2 parse, 3 numeric or shape,
/// 4 a hard theory check failed.
inline constexpr int kExitCheckFailed = 4;

/// Entry point for the `riga` tool; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace riga::cli
