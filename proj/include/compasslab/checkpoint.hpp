// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file layout:
//   bytes 0..7   magic "CLCKPT1\0"
//   bytes 8..15  little-endian u64, length of the JSON header
//   header       JSON {"tensors": {name: {"shape": [...], "offset": N}}}
//   payload      raw little-endian float32 data, offsets relative to payload
// Save and load are byte-exact inverses of each other.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "compasslab/tensor.hpp"

namespace compasslab {

void save_checkpoint(const std::filesystem::path& path,
                     const std::map<std::string, Tensor>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace compasslab
