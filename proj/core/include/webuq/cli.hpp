#pragma once

namespace webuq::cli {

/// Entry point behind the `webuq` binary. Subcommands: run, episode,
/// sweep, validate-fixtures, replay. Exit codes: 0 completion, 1 config
/// or usage error, 2 fixture error, 3 runtime abort.
int run_cli(int argc, const char* const* argv);

} // namespace webuq::cli
