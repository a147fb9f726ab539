#pragma once

#include <iosfwd>
#include <string>

namespace e2e::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one `e2e` invocation. Returns 0 on success, 2 on a usage error (usage
// text goes to `err`), 1 on a runtime failure.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Whether diagnostics may use ANSI color: stderr is a terminal and NO_COLOR is unset.
bool color_enabled();

}  // namespace e2e::cli
