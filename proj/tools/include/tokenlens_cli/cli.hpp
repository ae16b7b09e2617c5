#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tokenlens::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (args[0] is the program name). Diagnostics go to
// `err`, help text to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace tokenlens::cli
