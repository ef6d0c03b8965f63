#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rtge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

// Environment variable naming the directory for outputs without --output.
inline constexpr const char* kOutputDirEnv = "RTGE_OUTPUT_DIR";

/// Runs one command line. args[0] is the subcommand (no program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace rtge::cli
