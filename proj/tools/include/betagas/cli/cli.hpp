#pragma once

#include <iosfwd>

namespace betagas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
/// The experiment ran to completion but at least one PASS flag is unset.
inline constexpr int kExitClaimFailed = 3;

/// Entry point of the `betagas` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace betagas::cli
