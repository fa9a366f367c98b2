#pragma once

namespace cm::cli {

// Dispatches the command line tool. Machine-readable events go to stdout as
// JSON lines, human-readable progress to stderr. Exit codes: 0 success,
// 1 usage error, 2 malformed or missing data, 3 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace cm::cli
