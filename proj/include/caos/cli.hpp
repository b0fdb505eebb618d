#pragma once

#include <ostream>

namespace caos {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

// Entry point of the `caos` tool. Errors are reported on `err` as one line,
// "error: <category>: <message>".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace caos
