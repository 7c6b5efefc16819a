// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite-difference check of the trajectory gradient on a random problem.

#include <cstddef>
#include <cstdint>
#include <string>

#include "dmoa/learning.hpp"

namespace dmoa {

struct GradcheckOptions {
  std::size_t pool_size = 6;
  std::size_t dim = 16;
  std::size_t steps = 3;
  std::size_t max_route = 3;
  double temperature = 0.1;
  std::uint64_t seed = 7;
  double fd_step = 1e-6;
  /// Denominator floor of the relative error |a - f| / max(|a|, |f|, floor).
  double rel_floor = 1e-3;
  LossKind loss = LossKind::Ranking;
  /// Test hook: perturbs one analytic gradient entry before comparison.
  bool corrupt = false;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  /// Number of perturbations that changed some step's selected set.
  std::size_t selection_flips = 0;
};

/// Builds a seeded random trajectory (router params, per-step response
/// embeddings for every agent, per-step agent entropies), computes the
/// step-averaged loss gradient by BPTT, and compares every parameter
/// against central differences.
GradcheckResult gradient_check(const GradcheckOptions& options);

}  // namespace dmoa
