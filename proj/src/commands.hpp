#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace nstr {

extern const std::vector<std::string> kSubcommands;

bool is_subcommand(const std::string& name);

// Executes one subcommand against a run directory. Outputs land in run_dir
// under fixed names; existing outputs are refused unless overwrite is set.
// Throws Error on any failure.
void run_subcommand(const std::string& name, const Config& config, const std::string& run_dir,
                    bool overwrite);

}  // namespace nstr
