#pragma once

#include <iosfwd>

namespace ysm::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

// Entry point of the ysm executable: simulate, fp-solve, theory, sweep, analyze.
// Flags override values from --config.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ysm::cli
