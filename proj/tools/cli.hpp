#ifndef PORTIRL_TOOLS_CLI_HPP
#define PORTIRL_TOOLS_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace portirl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data or runtime failure
inline constexpr int kExitUsage = 2;

/// Entry point of the `portirl` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace portirl::cli

#endif  // PORTIRL_TOOLS_CLI_HPP
