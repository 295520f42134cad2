#pragma once

namespace fcausal::cli {

/// Parses argv, runs the subcommand and returns the process exit code:
/// 0 success, 1 usage or validation error, 2 numerical failure.
int dispatch(int argc, char** argv);

}  // namespace fcausal::cli
