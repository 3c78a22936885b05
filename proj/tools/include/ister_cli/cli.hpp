#pragma once

#include <iosfwd>

namespace ister::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Entry point of the `ister` tool. Human-readable progress goes to `err`;
/// each subcommand ends its `out` stream with one JSON line of metrics.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ister::cli
