#pragma once

#include <ostream>

namespace plastica::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the plastica command line: run, verify, plot and sweep.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plastica::runner
