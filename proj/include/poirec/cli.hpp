#pragma once

namespace poirec {

// Entry point for the `poirec` binary. Subcommands: preprocess,
// popularity-report, train, evaluate, sweep. Exit codes: 0 success,
// 1 usage/config error, 2 data error, 3 training divergence.
int cli_main(int argc, const char* const* argv);

}  // namespace poirec
