#pragma once

namespace bc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitModel = 4;

/// Entry point of the `bcengine` tool.
int run(int argc, char** argv);

}  // namespace bc::cli
