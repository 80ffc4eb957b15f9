#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cpekit::cli {

// Exit codes: 0 success, 1 computational failure, 2 invalid input.
constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitInput = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace cpekit::cli
