#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ccseg::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // usage, contract or configuration error, failed check
inline constexpr int kIoFailure = 2;

// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "CCSEG_OUT_DIR";

// Runs one command line; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

}  // namespace ccseg::cli
