#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kslab {

constexpr const char* kToolVersion = "1.0.0";

// Exit codes: 0 success, 1 validation failure, 2 runtime error,
// 3 verification battery failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

} // namespace kslab
