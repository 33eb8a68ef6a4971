#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace radsynth::pipeline {

/// Runs one pipeline subcommand. args excludes the program name.
/// Returns 0 on success, 1 on a runtime failure, 2 on a usage error; usage
/// and error text go to err.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace radsynth::pipeline
