#pragma once

#include <string>
#include <vector>

namespace dotlab::cli {

/// Parses argv, runs one subcommand, writes outputs plus manifest.json.
/// Returns 0 on success, 1 on configuration or domain errors, 2 on usage errors.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace dotlab::cli
