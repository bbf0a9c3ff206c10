// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "compass_lab.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "compasslab/common.hpp"
#include "compasslab/runner.hpp"

struct cl_lab {
  std::filesystem::path out_dir;
  std::string last_error;
};

extern "C" {

const char* cl_version(void) { return "0.1.0"; }

cl_status cl_lab_open(const char* out_dir, cl_lab** out_lab) {
  if (out_lab == nullptr) return CL_ERR_CONFIG;
  *out_lab = nullptr;
  std::string dir;
  if (out_dir != nullptr && out_dir[0] != '\0') {
    dir = out_dir;
  } else if (const char* env = std::getenv("COMPASS_LAB_OUT"); env != nullptr && env[0] != '\0') {
    dir = env;
  } else {
    dir = ".";
  }
  try {
    std::filesystem::create_directories(dir);
    *out_lab = new cl_lab{dir, std::string()};
    return CL_OK;
  } catch (const std::exception&) {
    return CL_ERR_CONFIG;
  }
}

void cl_lab_close(cl_lab* lab) { delete lab; }

cl_status cl_lab_run(cl_lab* lab, const char* subcommand, const char* config_json) {
  if (lab == nullptr) return CL_ERR_CONFIG;
  if (subcommand == nullptr) {
    lab->last_error = "subcommand is null";
    return CL_ERR_CONFIG;
  }
  try {
    lab->last_error.clear();
    const int rc = compasslab::run_subcommand(subcommand, config_json ? config_json : "{}",
                                              lab->out_dir);
    if (rc == 0) return CL_OK;
    lab->last_error = compasslab::strformat("subcommand '%s' reported validation failure", subcommand);
    return CL_ERR_RUN;
  } catch (const compasslab::ConfigError& e) {
    lab->last_error = e.what();
    return CL_ERR_CONFIG;
  } catch (const std::exception& e) {
    lab->last_error = e.what();
    return CL_ERR_RUN;
  }
}

const char* cl_lab_last_error(const cl_lab* lab) {
  return lab == nullptr ? "" : lab->last_error.c_str();
}

}  // extern "C"
