#pragma once

namespace adlti::pipeline {

// Parses the command line, runs one subcommand, maps errors to exit codes:
// 0 success, 2 config error, 3 data error, 4 numeric/degenerate error.
int run(int argc, char** argv);

}  // namespace adlti::pipeline
