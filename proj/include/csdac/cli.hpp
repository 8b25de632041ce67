#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace csdac::cli {

/// Exit codes: 0 success, 2 usage error, 1 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "CSDAC_OUTPUT_DIR";

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

/// Parses a sweep grid: "lo:hi:logK", "lo:hi:linK", "lo:hi" (unit steps) or
/// a comma-separated list.
std::vector<double> parse_grid(const std::string& spec);

/// Reads `key = value` lines; `#` starts a comment.
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path);

}  // namespace csdac::cli
