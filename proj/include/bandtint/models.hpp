#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bandtint/ops.hpp"
#include "bandtint/regions.hpp"
#include "bandtint/tensor.hpp"

namespace bandtint {

/// Learnable weights of one gating block: 1×1 convolutions C -> C/r -> C,
/// bias-free.
template <class T>
struct SebParams {
  Tensor<T> w1;  // [C/r, C, 1, 1]
  Tensor<T> w2;  // [C, C/r, 1, 1]
};

/// σ(W2 · ReLU(W1 · X)) with pointwise convolutions; values in (0, 1).
template <class T>
Tensor<T> seb_gate(Graph<T>* g, const Tensor<T>& x, const SebParams<T>& p);

/// X ⊙ seb_gate(X).
template <class T>
Tensor<T> seb_block(Graph<T>* g, const Tensor<T>& x, const SebParams<T>& p);

/// Ordered, named parameter storage shared by the networks. Parameters are
/// registered once at construction in a fixed order, which is also the
/// snapshot order.
template <class T>
class ParamStore {
 public:
  ParamStore() = default;
  /// Copies are deep: a copied model never aliases the original's weights.
  ParamStore(const ParamStore& other) { *this = other; }
  ParamStore& operator=(const ParamStore& other) {
    if (this != &other) {
      params_.clear();
      for (const auto& p : other.params_) params_.push_back({p.name, p.tensor.clone()});
    }
    return *this;
  }
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  std::size_t add(std::string name, Shape shape);

  const Tensor<T>& operator[](std::size_t i) const { return params_[i].tensor; }
  ParamList<T>& list() { return params_; }
  const ParamList<T>& list() const { return params_; }

  /// Fan-in scaled uniform weights, zero biases. Parameters whose name starts
  /// with one of `zero_prefixes` are left at zero.
  void init_uniform(std::uint64_t seed, const std::vector<std::string>& zero_prefixes);
  void copy_from(const ParamList<T>& other);
  void fill_zero();

 private:
  ParamList<T> params_;
};

struct ConvIndex {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

// ---------------------------------------------------------------------------

struct UNetConfig {
  std::array<int, 4> widths{16, 32, 64, 128};
  int seb_reduction = 4;
};

/// 4-level residual U-Net with a gating block on every skip connection.
/// Output = input + residual(input). Input extents must be divisible by 16.
template <class T>
class UNet {
 public:
  /// Random weights from `seed`; the output convolution starts at zero so an
  /// untrained network is the identity.
  UNet(const UNetConfig& cfg, std::uint64_t seed);
  static UNet zeros(const UNetConfig& cfg);

  Tensor<T> forward(Graph<T>* g, const Tensor<T>& img) const;

  const UNetConfig& config() const { return cfg_; }
  ParamList<T>& params() { return store_.list(); }
  const ParamList<T>& params() const { return store_.list(); }

  template <class U>
  UNet<U> cast() const;

 private:
  explicit UNet(const UNetConfig& cfg);
  SebParams<T> seb(int level) const;

  UNetConfig cfg_;
  ParamStore<T> store_;
  std::array<ConvIndex, 4> enc_a_{}, enc_b_{}, dec_up_{}, dec_fuse_{};
  std::array<std::size_t, 4> seb_w1_{}, seb_w2_{};
  ConvIndex mid_a_{}, mid_b_{}, out_{};
};

// ---------------------------------------------------------------------------

struct StubConfig {
  std::array<int, 3> widths{8, 16, 32};
  /// Band-domain stubs emit signed values (no output sigmoid).
  bool band_domain = false;
};

/// Small gray-in, RGB-out encoder-decoder standing in for a full colorizer.
/// Input extents must be divisible by 8.
template <class T>
class ColorizerStub {
 public:
  ColorizerStub(const StubConfig& cfg, std::uint64_t seed);
  static ColorizerStub zeros(const StubConfig& cfg);

  Tensor<T> forward(Graph<T>* g, const Tensor<T>& gray) const;

  const StubConfig& config() const { return cfg_; }
  ParamList<T>& params() { return store_.list(); }
  const ParamList<T>& params() const { return store_.list(); }

  template <class U>
  ColorizerStub<U> cast() const;

 private:
  explicit ColorizerStub(const StubConfig& cfg);

  StubConfig cfg_;
  ParamStore<T> store_;
  std::array<ConvIndex, 3> enc_{}, dec_{};
  ConvIndex mid_{}, out_{};
};

// ---------------------------------------------------------------------------

struct CastConfig {
  std::array<int, 3> widths{8, 16, 32};
  SchemeKind scheme = SchemeKind::five();
};

/// Residual encoder-decoder conditioned on region mean colors: the mean
/// vector passes through a fully connected layer whose output is added to
/// every bottleneck position. Input extents must be divisible by 8.
template <class T>
class CastCorrector {
 public:
  CastCorrector(const CastConfig& cfg, std::uint64_t seed);
  static CastCorrector zeros(const CastConfig& cfg);

  Tensor<T> forward(Graph<T>* g, const Tensor<T>& img, const Tensor<T>& means) const;

  std::size_t mean_length() const;
  const CastConfig& config() const { return cfg_; }
  ParamList<T>& params() { return store_.list(); }
  const ParamList<T>& params() const { return store_.list(); }

  /// Index of the injection layer weight in params().
  std::size_t fc_weight_index() const { return fc_.weight; }
  std::size_t output_weight_index() const { return out_.weight; }

  template <class U>
  CastCorrector<U> cast() const;

 private:
  explicit CastCorrector(const CastConfig& cfg);

  CastConfig cfg_;
  ParamStore<T> store_;
  std::array<ConvIndex, 3> enc_{}, dec_{};
  ConvIndex mid_{}, fc_{}, out_{};
};

}  // namespace bandtint
