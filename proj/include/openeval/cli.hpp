#pragma once

#include <iosfwd>

namespace openeval {

/// Entry point of the `openeval` tool. Exit codes: 0 success, 1 invalid or
/// unreadable input, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace openeval
