#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dob::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConstraint = 3;
inline constexpr int kExitReproduction = 4;

/// Runs one invocation. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dob::cli
