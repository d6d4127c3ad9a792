#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impctl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAudit = 2;

/// Residual |Y0 - J(delta*)| above which a solve run is reported as inconsistent.
inline constexpr double kConsistencyTolerance = 1e-10;

/// Entry point for `impctl <subcommand> ...`; args excludes the program name.
/// Subcommands: solve, solve-combined, oracle, eval, snell, dump.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impctl::cli
