#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bandtint/tensor.hpp"

namespace bandtint {

/// Builds a scalar loss from `input`; must record on the graph when given one.
using ForwardLoss =
    std::function<Tensor<double>(Graph<double>*, const Tensor<double>& input)>;

struct GradCheckOptions {
  /// 0 checks every entry; otherwise a seeded sample of at most this many
  /// entries per parameter.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
  /// Entries whose ±epsilon probes switched a relu, clamp or absolute value
  /// to its other branch. The function is not differentiable inside such a
  /// probe interval, so these entries are excluded from max_rel_error.
  std::size_t kinks_skipped = 0;
};

/// Compares reverse-mode gradients with central differences, reporting
/// max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8) over the
/// entries whose probes stay on the branches of the unperturbed forward.
GradCheckResult grad_check(const ForwardLoss& model_forward, ParamList<double>& params,
                           const Tensor<double>& input, double epsilon,
                           const GradCheckOptions& options = {});

}  // namespace bandtint
