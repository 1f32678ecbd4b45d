#pragma once

#include <cstdint>
#include <span>

#include "bandtint/tensor.hpp"

/// Differentiable primitives.
///
/// Every op takes the graph to record on as its first argument. Pass nullptr
/// for inference; nothing is recorded and no gradients are tracked. Images and
/// feature maps are [C,H,W]. Every op rejects non-finite results.
namespace bandtint::ops {

enum class Activation { kRelu, kSigmoid };

/// While alive, hashes which side of its kink every relu, clamp01 and
/// mean_abs_diff element lands on, for ops run on this thread. Two forwards
/// with equal fingerprints took the same branches everywhere.
class KinkTrace {
 public:
  KinkTrace();
  ~KinkTrace();
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;

  std::uint64_t fingerprint() const noexcept { return hash_; }
  void note(std::uint64_t branch) noexcept {
    hash_ = (hash_ ^ branch) * 0x100000001B3ULL;
  }

 private:
  KinkTrace* previous_;
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};
enum class Resample { kDown2Mean, kUp2Nearest };

template <class T>
Tensor<T> conv2d(Graph<T>* g, const Tensor<T>& input, const Tensor<T>& kernel,
                 const Tensor<T>& bias, int stride = 1, int padding = 0);

template <class T>
Tensor<T> linear(Graph<T>* g, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias);

template <class T>
Tensor<T> activation(Graph<T>* g, const Tensor<T>& input, Activation kind);

template <class T>
Tensor<T> relu(Graph<T>* g, const Tensor<T>& x) {
  return activation(g, x, Activation::kRelu);
}
template <class T>
Tensor<T> sigmoid(Graph<T>* g, const Tensor<T>& x) {
  return activation(g, x, Activation::kSigmoid);
}

template <class T>
Tensor<T> resample(Graph<T>* g, const Tensor<T>& input, Resample kind);

// Elementwise, equal shapes.
template <class T>
Tensor<T> add(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> div(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b);

/// a * x + b elementwise.
template <class T>
Tensor<T> affine(Graph<T>* g, const Tensor<T>& x, T a, T b);

/// Clamp to [0, 1]; gradient passes only where the input is inside.
template <class T>
Tensor<T> clamp01(Graph<T>* g, const Tensor<T>& x);

template <class T>
Tensor<T> sum(Graph<T>* g, const Tensor<T>& x);
template <class T>
Tensor<T> mean(Graph<T>* g, const Tensor<T>& x);

/// Mean absolute difference; the target never receives a gradient.
template <class T>
Tensor<T> mean_abs_diff(Graph<T>* g, const Tensor<T>& pred,
                        const Tensor<T>& target);

/// Concatenates two [C,H,W] maps along channels.
template <class T>
Tensor<T> concat_channels(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b);

/// Adds v[c] to every spatial position of channel c of x[C,H,W].
template <class T>
Tensor<T> add_channel_vector(Graph<T>* g, const Tensor<T>& x, const Tensor<T>& v);

/// Valid-mode correlation of every channel with one fixed k×k window.
template <class T>
Tensor<T> depthwise_filter(Graph<T>* g, const Tensor<T>& x,
                           std::span<const T> window, int k);

}  // namespace bandtint::ops
