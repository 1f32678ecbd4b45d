#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bandtint/error.hpp"

namespace bandtint {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <class T>
class Graph;

/// Dense row-major array with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage, so a parameter held by a model
/// and the same parameter referenced from a Graph are one object. Use clone()
/// for an independent copy. Values are immutable after construction except
/// through mutable_data(), which is reserved for initialization, optimizer
/// updates and finite-difference probing.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl().shape; }
  std::size_t rank() const { return impl().shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return impl().data.size(); }

  std::span<const T> data() const { return impl().data; }
  std::span<T> mutable_data() { return impl().data; }
  T item() const;

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool flag) { impl().requires_grad = flag; }

  bool has_grad() const { return impl().grad.has_value(); }
  std::span<const T> grad() const;
  /// Gradient buffer, allocated as zeros on first access.
  std::span<T> grad_buffer() const;
  void clear_grad() { impl().grad.reset(); }

  Tensor clone() const;

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(impl().data.begin(), impl().data.end());
    return Tensor<U>(impl().shape, std::move(out), impl().requires_grad);
  }

  bool same_storage(const Tensor& other) const noexcept {
    return impl_ == other.impl_;
  }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::optional<std::vector<T>> grad;
    bool requires_grad = false;
  };

  Impl& impl() const;

  std::shared_ptr<Impl> impl_;
};

/// A parameter tensor paired with its name for snapshots and diagnostics.
template <class T>
struct Param {
  std::string name;
  Tensor<T> tensor;
};

template <class T>
using ParamList = std::vector<Param<T>>;

/// Deep-copies a parameter list, converting precision.
template <class U, class T>
ParamList<U> cast_params(const ParamList<T>& params) {
  ParamList<U> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({p.name, p.tensor.template cast<U>()});
  return out;
}

/// Ordered tape of executed operations.
///
/// Operations append themselves through record(); backward() replays the
/// tape once in reverse. A Graph is single-use per training step.
template <class T>
class Graph {
 public:
  /// Receives the gradient of the recorded output and accumulates into the
  /// gradients of the inputs it captured.
  using BackwardFn = std::function<void(std::span<const T> grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void record(std::vector<Tensor<T>> inputs, const Tensor<T>& output,
              BackwardFn backward);

  void backward(const Tensor<T>& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// True when an op should be recorded: a live graph and at least one input
/// that takes part in differentiation.
template <class T>
bool should_record(const Graph<T>* graph,
                   std::initializer_list<const Tensor<T>*> inputs) {
  if (graph == nullptr) return false;
  for (const auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

}  // namespace bandtint
