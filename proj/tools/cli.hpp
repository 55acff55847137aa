#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maserlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. Results go to files under the output directory; a
/// short summary goes to `out`, diagnostics and usage text to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace maserlab::cli
