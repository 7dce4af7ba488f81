// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ordspec {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand. Returns 0 on success, 1 on user error, 2 on
/// internal error. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace ordspec
