#include "bandtint/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bandtint/ops.hpp"
#include "bandtint/random.hpp"

namespace bandtint {
namespace {

std::vector<std::size_t> pick_entries(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit == 0 || limit >= n) return idx;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < limit; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckResult grad_check(const ForwardLoss& model_forward, ParamList<double>& params,
                           const Tensor<double>& input, double epsilon,
                           const GradCheckOptions& options) {
  if (!(epsilon > 0.0)) throw invalid_argument("grad_check: epsilon must be positive");

  for (auto& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.clear_grad();
  }
  {
    Graph<double> graph;
    auto loss = model_forward(&graph, input);
    graph.backward(loss);
  }

  std::uint64_t branches = 0;
  {
    ops::KinkTrace trace;
    (void)model_forward(nullptr, input);
    branches = trace.fingerprint();
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& p : params) {
    std::vector<double> analytic(p.tensor.numel(), 0.0);
    if (p.tensor.has_grad()) {
      const auto g = p.tensor.grad();
      std::copy(g.begin(), g.end(), analytic.begin());
    }
    auto values = p.tensor.mutable_data();
    for (auto i : pick_entries(values.size(), options.max_entries_per_param, rng)) {
      const double original = values[i];
      bool crossed = false;
      auto probe = [&](double v) {
        values[i] = v;
        double loss = 0.0;
        try {
          ops::KinkTrace trace;
          loss = model_forward(nullptr, input).item();
          crossed = crossed || trace.fingerprint() != branches;
        } catch (const Error& e) {
          values[i] = original;
          throw numeric_error("grad_check: parameter '" + p.name + "' index " +
                              std::to_string(i) + ": " + e.what());
        }
        if (!std::isfinite(loss)) {
          values[i] = original;
          throw numeric_error("grad_check: non-finite loss probing parameter '" +
                              p.name + "' index " + std::to_string(i));
        }
        return loss;
      };
      const double plus = probe(original + epsilon);
      const double minus = probe(original - epsilon);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[i];
      if (!std::isfinite(a))
        throw numeric_error("grad_check: non-finite analytic gradient for '" + p.name +
                            "' index " + std::to_string(i));
      if (crossed) {
        ++result.kinks_skipped;
        continue;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (result.worst_param.empty() || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  for (auto& p : params) p.tensor.clear_grad();
  return result;
}

}  // namespace bandtint
