// Copyright 2026 the compass-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-finite-difference checks for every differentiable op. The oracle
// only calls forward passes, so it is independent of the hand-written
// backward rules it verifies.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace compasslab {

struct GradCheckResult {
  std::string op;
  int cases = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Runs `cases_per_op` seeded random cases per registered op, comparing the
// analytic gradient against (f(x+h) - f(x-h)) / 2h with h = 1e-3. Relative
// error uses |a - fd| / max(|a|, |fd|, 1).
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, int cases_per_op,
                                           double tolerance = 1e-4);

bool gradcheck_all_pass(const std::vector<GradCheckResult>& results);

}  // namespace compasslab
