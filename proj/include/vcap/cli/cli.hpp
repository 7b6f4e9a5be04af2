#pragma once

namespace vcap::cli {

/// Exit codes of the `vcap` binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Parses argv, dispatches the subcommand and maps errors to exit codes.
int run(int argc, char** argv);

}  // namespace vcap::cli
