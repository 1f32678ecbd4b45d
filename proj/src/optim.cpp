#include "bandtint/optim.hpp"

#include <cmath>

namespace bandtint {

AdamState::AdamState(const ParamList<float>& params, double lr) : learning_rate(lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr))
    throw invalid_argument("learning rate must be finite and non-negative");
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.tensor.numel(), 0.0);
    second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
}

void optim_step(ParamList<float>& params, AdamState& state) {
  if (params.size() != state.first_moment.size())
    throw state_error("optimizer state built for " +
                      std::to_string(state.first_moment.size()) +
                      " parameters, got " + std::to_string(params.size()));
  for (const auto& p : params) {
    if (!p.tensor.has_grad())
      throw state_error("optim_step: parameter '" + p.name + "' has no gradient");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& tensor = params[k].tensor;
    auto values = tensor.mutable_data();
    const auto grad = tensor.grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != values.size())
      throw state_error("optimizer state shape mismatch for '" + params[k].name + "'");
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      const double update =
          state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      values[i] = static_cast<float>(values[i] - update);
    }
    tensor.clear_grad();
  }
}

}  // namespace bandtint
