// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

namespace compasslab {

// Dispatches one CLI subcommand. config_json carries the resolved
// configuration (file contents with flag overrides already applied).
// Returns 0 on success, 1 when a run-level validation fails (e.g. a failed
// acceptance criterion). Throws ConfigError for unknown subcommands or bad
// configuration; other exceptions indicate runtime failures.
int run_subcommand(const std::string& subcommand, const std::string& config_json,
                   const std::filesystem::path& out_dir);

}  // namespace compasslab
