// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace compasslab {

// Counter-based pseudorandom generator. Draw i of stream (seed) is
// mix64(seed + (i+1) * GOLDEN) where mix64 is the splitmix64 finalizer, so a
// (seed, counter) pair fully determines the output on every platform and
// streams can be split without sequencing constraints.
class Prng {
 public:
  explicit Prng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * kGolden);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  float next_float() { return static_cast<float>(next_double()); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller; consumes exactly two draws per call so the stream position
  // stays a pure function of how many values were requested.
  double next_normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  float next_normal_f(float mean = 0.0f, float stddev = 1.0f) {
    return mean + stddev * static_cast<float>(next_normal());
  }

  // Independent child stream; children with distinct ids never collide with
  // each other or with the parent sequence.
  Prng split(std::uint64_t stream_id) const {
    return Prng(mix64(seed_ ^ mix64(stream_id * kGolden + 0x632be59bd9b4e019ull)));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace compasslab
