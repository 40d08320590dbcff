#pragma once

namespace landscape::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitUsage = 64;

/// Entry point of the `landscape` executable. Prints a JSON summary on stdout.
int run(int argc, char** argv);

}  // namespace landscape::cli
