/*
 * Copyright 2026 the compass-lab authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the compass-lab shared library. All state lives behind the opaque
 * cl_lab handle; every call returns a status code and the handle keeps the
 * message of the last failure.
 */

#ifndef COMPASS_LAB_H
#define COMPASS_LAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque lab session bound to an output directory. */
typedef struct cl_lab cl_lab;

typedef enum cl_status {
  CL_OK = 0,          /* success */
  CL_ERR_RUN = 1,     /* validation or runtime failure */
  CL_ERR_CONFIG = 2   /* bad config, unknown subcommand, bad arguments */
} cl_status;

/* Library version string, e.g. "0.1.0". */
const char* cl_version(void);

/*
 * Opens a session. out_dir receives every artifact (manifests, CSV metrics,
 * checkpoints). Passing NULL for out_dir uses the COMPASS_LAB_OUT environment
 * variable and falls back to the current directory.
 */
cl_status cl_lab_open(const char* out_dir, cl_lab** out_lab);

void cl_lab_close(cl_lab* lab);

/*
 * Runs one subcommand (pretrain | sft | align | rm-train | mixture-search |
 * quantize | plan-parallel | eval | gen-synthetic | acceptance).
 * config_json is the full configuration object as a JSON string, including
 * the global "seed" and "jobs" keys; flag overrides must already be merged.
 */
cl_status cl_lab_run(cl_lab* lab, const char* subcommand, const char* config_json);

/* Message for the most recent failing call on this handle ("" if none). */
const char* cl_lab_last_error(const cl_lab* lab);

#ifdef __cplusplus
}
#endif

#endif /* COMPASS_LAB_H */
