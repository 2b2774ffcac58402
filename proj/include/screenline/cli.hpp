#pragma once

#include <iosfwd>

namespace screenline::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kInternal = 3;

/// Entry point for the `screenline` tool. Output goes to `out`, diagnostics
/// and usage text to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace screenline::cli
