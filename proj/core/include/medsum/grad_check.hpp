#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "medsum/tape.hpp"

namespace medsum {

// Builds a scalar loss on the given tape from the current parameter values.
// Called repeatedly by grad_check, so it must be a pure function of the
// parameter tensors it closes over.
using LossBuilder = std::function<TensorRef(Tape&)>;

struct GradCheckReport {
  real max_rel_error = 0.0;
  int coords_checked = 0;
};

// Compares analytic gradients (one backward pass) against central finite
// differences (f(p+eps) - f(p-eps)) / 2eps on a seeded sample of at least
// `coords_per_tensor` coordinates per parameter tensor (all coordinates when
// the tensor is smaller). Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const LossBuilder& f,
                           const std::vector<TensorRef>& params, real eps,
                           std::uint64_t seed, int coords_per_tensor = 25);

}  // namespace medsum
