#pragma once

#include <ostream>

namespace permcd {

/// Exit codes: 0 success, 1 unexpected error, 2 configuration or usage
/// error, 3 a verification check failed.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitVerifyFailed = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace permcd
