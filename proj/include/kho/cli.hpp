#pragma once

namespace kho {

/// Entry point for the command-line tool. Subcommands: simulate, fig1..fig4,
/// chi, lyapunov, render, validate. Returns 0 on success, 1 on configuration
/// or usage errors, 2 on numerical-guard failures.
int cli_main(int argc, char** argv);

} // namespace kho
