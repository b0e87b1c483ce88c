#pragma once

#include <ostream>

namespace coffee {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Parses argv and runs one subcommand: stats, extract, analyze-correlation,
// train, eval, ablate or predict. Usage errors return 2, module errors 1.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace coffee
