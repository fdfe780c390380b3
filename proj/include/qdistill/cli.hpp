/**
 * cli.hpp: the `qdistill` command line.
 *
 * Subcommands: synth, harvest, distill, calibrate, eval, sweep, ablate.
 * Every subcommand takes `--config <file>`; flags given alongside override
 * the file. Exit status is 0 on success and exit_code(kind) on failure.
 */
#pragma once

#include <ostream>

namespace qdistill {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qdistill
