#include "bandtint/tensor.hpp"

#include <sstream>

namespace bandtint {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <class T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0)
      throw shape_error("tensor extent " + std::to_string(i) + " is zero in " +
                        shape_string(shape));
  }
  if (shape_numel(shape) != data.size())
    throw shape_error("tensor shape " + shape_string(shape) + " needs " +
                      std::to_string(shape_numel(shape)) + " values, got " +
                      std::to_string(data.size()));
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <class T>
typename Tensor<T>::Impl& Tensor<T>::impl() const {
  if (!impl_) throw state_error("use of an undefined tensor");
  return *impl_;
}

template <class T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = impl().shape;
  if (axis >= s.size())
    throw shape_error("axis " + std::to_string(axis) + " out of range for " +
                      shape_string(s));
  return s[axis];
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw shape_error("item() on non-scalar tensor " + shape_string(shape()));
  return impl().data[0];
}

template <class T>
std::span<const T> Tensor<T>::grad() const {
  if (!impl().grad) throw state_error("tensor has no gradient");
  return *impl().grad;
}

template <class T>
std::span<T> Tensor<T>::grad_buffer() const {
  auto& im = impl();
  if (!im.grad) im.grad.emplace(im.data.size(), T(0));
  return *im.grad;
}

template <class T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(impl().shape, impl().data, impl().requires_grad);
  if (impl().grad) out.impl_->grad = impl().grad;
  return out;
}

template <class T>
void Graph<T>::record(std::vector<Tensor<T>> inputs, const Tensor<T>& output,
                      BackwardFn backward) {
  if (consumed_) throw state_error("graph already consumed by backward()");
  Tensor<T> out = output;
  out.set_requires_grad(true);
  nodes_.push_back({std::move(inputs), out, std::move(backward)});
}

template <class T>
void Graph<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined()) throw invalid_argument("backward on undefined loss");
  if (loss.numel() != 1)
    throw shape_error("backward requires a scalar loss, got " +
                      shape_string(loss.shape()));
  std::size_t end = nodes_.size();
  while (end > 0 && !nodes_[end - 1].output.same_storage(loss)) --end;
  if (end == 0) throw state_error("loss tensor was not produced on this graph");
  if (consumed_) throw state_error("graph already consumed by backward()");
  consumed_ = true;

  Tensor<T> seed = loss;
  seed.grad_buffer()[0] = T(1);
  for (std::size_t i = end; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.output.has_grad()) continue;
    node.backward(node.output.grad());
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace bandtint
