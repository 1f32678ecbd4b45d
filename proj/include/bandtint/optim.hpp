#pragma once

#include <cstdint>
#include <vector>

#include "bandtint/tensor.hpp"

namespace bandtint {

/// Adaptive-moment optimizer state for one parameter list.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  /// Zero-initialized accumulators shaped like `params`.
  AdamState(const ParamList<float>& params, double lr);
};

/// One Adam update in place; clears the gradients afterwards. Throws if a
/// parameter has no gradient.
void optim_step(ParamList<float>& params, AdamState& state);

}  // namespace bandtint
