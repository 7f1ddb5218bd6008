#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bcdp::cli {

inline constexpr const char* kVersion = "bcdp 0.1.0";

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_validation = 2, exit_acceptance = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Learning-rate default for a maze environment id (smaller on larger layouts).
double default_learning_rate(const std::string& env_id);

} // namespace bcdp::cli
