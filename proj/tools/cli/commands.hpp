#pragma once

#include <iosfwd>

namespace unalse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInputParse = 3,
  kNumeric = 4,
};

/// Thread count used when --threads is absent: UNALSE_THREADS if it holds a
/// positive integer, else 1.
unsigned default_threads();

/// Entry point shared by the executable and the tests. Normal output goes to
/// `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace unalse::cli
