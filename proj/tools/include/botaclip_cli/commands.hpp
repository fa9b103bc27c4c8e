#pragma once

#include <string>
#include <vector>

namespace botaclip::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Parses and runs one subcommand. Errors are reported on stderr as a single
// JSON line {"error": kind, "exit_code": n, "message": text}.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace botaclip::cli
