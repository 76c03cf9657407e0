#pragma once

namespace copnet::cli {

inline constexpr const char* kVersion = "0.1.0";

// Full command-line entry point (subcommands: synth, simulate, close,
// label, evaluate, grid, stats). Returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace copnet::cli
