// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "compasslab/runner.hpp"

#include "compasslab/common.hpp"

namespace compasslab {

int run_subcommand(const std::string& subcommand, const std::string& config_json,
                   const std::filesystem::path& out_dir) {
  (void)config_json;
  (void)out_dir;
  fail_config("unknown subcommand '%s'", subcommand.c_str());
}

}  // namespace compasslab
