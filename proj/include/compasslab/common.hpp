// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace compasslab {

// Base error for everything raised by the lab. Subcommands map ConfigError
// to exit code 2 and every other failure to exit code 1.
class LabError : public std::runtime_error {
 public:
  explicit LabError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad config file, unknown subcommand, invalid flag combination.
class ConfigError : public LabError {
 public:
  explicit ConfigError(const std::string& msg) : LabError(msg) {}
};

// Violated precondition or invariant at runtime (shape mismatch, NaN, ...).
class ValidationError : public LabError {
 public:
  explicit ValidationError(const std::string& msg) : LabError(msg) {}
};

std::string strformat(const char* fmt, ...);

[[noreturn]] void fail_config(const char* fmt, ...);
[[noreturn]] void fail_validation(const char* fmt, ...);

// Deterministic decimal rendering used for every CSV/JSON metric we emit.
// Round-trips doubles exactly and never depends on locale.
std::string format_double(double v);
std::string format_float(float v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t size);

// Append-only CSV writer; rows are flushed on write so partial runs still
// leave a parsable file behind.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void write_row(const std::vector<std::string>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_;
};

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_token_pair(const std::vector<std::int32_t>& prompt,
                              const std::vector<std::int32_t>& response);

// Runs fn(0..n-1) on up to `jobs` worker threads. Each index owns its slot of
// any output buffer, so results do not depend on scheduling order.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace compasslab
