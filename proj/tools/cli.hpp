#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace puck::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `puck` invocation. argv[0] is the program name. Reports go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace puck::cli
