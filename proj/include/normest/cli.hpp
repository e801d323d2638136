#pragma once

namespace normest {

// Full command-line surface. Returns the process exit code:
// 0 success, 1 usage error, 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace normest
