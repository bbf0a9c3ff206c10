// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "compasslab/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

namespace compasslab {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'C', 'L', 'C', 'K', 'P', 'T', '1', '\0'};
}

void save_checkpoint(const std::filesystem::path& path,
                     const std::map<std::string, Tensor>& tensors) {
  nlohmann::json header;
  header["tensors"] = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : tensors) {
    nlohmann::json entry;
    entry["shape"] = tensor.shape();
    entry["offset"] = offset;
    header["tensors"][name] = entry;
    offset += tensor.values().size() * sizeof(float);
  }
  const std::string header_str = header.dump();

  std::string blob;
  blob.reserve(16 + header_str.size() + offset);
  blob.append(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_str.size();
  blob.append(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  blob.append(header_str);
  for (const auto& [name, tensor] : tensors) {
    blob.append(reinterpret_cast<const char*>(tensor.values().data()),
                tensor.values().size() * sizeof(float));
  }
  write_binary_file(path, blob.data(), blob.size());
}

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> blob = read_binary_file(path);
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    fail_validation("not a checkpoint file: %s", path.string().c_str());
  }
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, blob.data() + 8, sizeof(header_len));
  if (16 + header_len > blob.size()) fail_validation("truncated checkpoint header");
  const nlohmann::json header = nlohmann::json::parse(
      blob.begin() + 16, blob.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  const std::size_t payload_start = 16 + static_cast<std::size_t>(header_len);

  std::map<std::string, Tensor> out;
  for (const auto& [name, entry] : header.at("tensors").items()) {
    Shape shape = entry.at("shape").get<Shape>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const std::size_t n = static_cast<std::size_t>(shape_numel(shape));
    if (payload_start + offset + n * sizeof(float) > blob.size()) {
      fail_validation("checkpoint payload truncated for tensor '%s'", name.c_str());
    }
    std::vector<float> values(n);
    std::memcpy(values.data(), blob.data() + payload_start + offset, n * sizeof(float));
    out.emplace(name, Tensor::from_values(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace compasslab
