#pragma once

namespace laecf::cli {

// Parses argv, dispatches the subcommand, and maps errors to exit codes:
// 0 success, 1 usage/config, 2 data, 3 solver/internal.
int cli_main(int argc, char** argv);

}  // namespace laecf::cli
