#pragma once

#include <map>
#include <string>
#include <vector>

namespace diip {

inline constexpr const char* kToolVersion = "diip 0.1.0";

/// Flat "key = value" file; '#' starts a comment. Values may be quoted.
std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path);

/// Entry point of the `diip` tool. Returns the process exit code:
/// 0 success, 1 numerical failure, 2 usage or I/O error.
int run_cli(const std::vector<std::string>& args);

}  // namespace diip
