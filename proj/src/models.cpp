#include "bandtint/models.hpp"

#include <cmath>

#include "bandtint/random.hpp"

namespace bandtint {
namespace {

using ops::Resample;

template <class T>
ConvIndex add_conv(ParamStore<T>& s, const std::string& name, int in, int out, int k) {
  const auto weight = s.add(name + ".weight", {static_cast<std::size_t>(out),
                                               static_cast<std::size_t>(in),
                                               static_cast<std::size_t>(k),
                                               static_cast<std::size_t>(k)});
  const auto bias = s.add(name + ".bias", {static_cast<std::size_t>(out)});
  return {weight, bias};
}

template <class T>
Tensor<T> conv3(Graph<T>* g, const ParamStore<T>& s, ConvIndex c, const Tensor<T>& x) {
  return ops::conv2d(g, x, s[c.weight], s[c.bias], 1, 1);
}

template <class T>
Tensor<T> conv3_relu(Graph<T>* g, const ParamStore<T>& s, ConvIndex c, const Tensor<T>& x) {
  return ops::relu(g, conv3(g, s, c, x));
}

template <class T>
Tensor<T> down(Graph<T>* g, const Tensor<T>& x) {
  return ops::resample(g, x, Resample::kDown2Mean);
}

template <class T>
Tensor<T> up(Graph<T>* g, const Tensor<T>& x) {
  return ops::resample(g, x, Resample::kUp2Nearest);
}

template <class T>
void require_image(const Tensor<T>& x, std::size_t channels, int multiple, const char* model) {
  if (x.rank() != 3 || x.dim(0) != channels)
    throw shape_error(std::string(model) + ": expected a " + std::to_string(channels) +
                      "-channel [C,H,W] input, got " + shape_string(x.shape()));
  const auto m = static_cast<std::size_t>(multiple);
  if (x.dim(1) % m != 0 || x.dim(2) % m != 0)
    throw shape_error(std::string(model) + ": input extents " + std::to_string(x.dim(1)) +
                      "x" + std::to_string(x.dim(2)) + " must be multiples of " +
                      std::to_string(multiple));
}

template <class T>
Tensor<T> pointwise(Graph<T>* g, const Tensor<T>& x, const Tensor<T>& w) {
  const auto zero_bias = Tensor<T>::zeros({w.dim(0)});
  return ops::conv2d(g, x, w, zero_bias, 1, 0);
}

}  // namespace

template <class T>
Tensor<T> seb_gate(Graph<T>* g, const Tensor<T>& x, const SebParams<T>& p) {
  if (x.rank() != 3) throw shape_error("seb_gate: input must be [C,H,W]");
  if (p.w1.rank() != 4 || p.w2.rank() != 4 || p.w1.dim(1) != x.dim(0) ||
      p.w2.dim(0) != x.dim(0) || p.w2.dim(1) != p.w1.dim(0) || p.w1.dim(2) != 1 ||
      p.w2.dim(2) != 1)
    throw shape_error("seb_gate: weights " + shape_string(p.w1.shape()) + " / " +
                      shape_string(p.w2.shape()) + " do not fit " +
                      std::to_string(x.dim(0)) + " channels");
  return ops::sigmoid(g, pointwise(g, ops::relu(g, pointwise(g, x, p.w1)), p.w2));
}

template <class T>
Tensor<T> seb_block(Graph<T>* g, const Tensor<T>& x, const SebParams<T>& p) {
  return ops::mul(g, x, seb_gate(g, x, p));
}

// ---------------------------------------------------------------------------

template <class T>
std::size_t ParamStore<T>::add(std::string name, Shape shape) {
  params_.push_back({std::move(name), Tensor<T>::zeros(std::move(shape))});
  return params_.size() - 1;
}

template <class T>
void ParamStore<T>::init_uniform(std::uint64_t seed,
                                 const std::vector<std::string>& zero_prefixes) {
  Rng rng(seed);
  for (auto& p : params_) {
    auto values = p.tensor.mutable_data();
    bool zero = p.tensor.rank() == 1;
    for (const auto& prefix : zero_prefixes)
      if (p.name.compare(0, prefix.size(), prefix) == 0) zero = true;
    if (zero) {
      std::fill(values.begin(), values.end(), T(0));
      continue;
    }
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < p.tensor.rank(); ++i) fan_in *= p.tensor.dim(i);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
  }
}

template <class T>
void ParamStore<T>::copy_from(const ParamList<T>& other) {
  if (other.size() != params_.size())
    throw shape_error("parameter count mismatch: " + std::to_string(other.size()) + " vs " +
                      std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (other[i].tensor.shape() != params_[i].tensor.shape())
      throw shape_error("parameter '" + params_[i].name + "' shape mismatch");
    const auto src = other[i].tensor.data();
    std::copy(src.begin(), src.end(), params_[i].tensor.mutable_data().begin());
  }
}

template <class T>
void ParamStore<T>::fill_zero() {
  for (auto& p : params_) {
    auto v = p.tensor.mutable_data();
    std::fill(v.begin(), v.end(), T(0));
  }
}

// ---------------------------------------------------------------------------

template <class T>
UNet<T>::UNet(const UNetConfig& cfg) : cfg_(cfg) {
  const auto& w = cfg.widths;
  for (int c : w) {
    if (c <= 0 || c % cfg.seb_reduction != 0)
      throw invalid_argument("U-Net width " + std::to_string(c) +
                             " must be a positive multiple of the reduction ratio " +
                             std::to_string(cfg.seb_reduction));
  }
  int in = 3;
  for (int l = 0; l < 4; ++l) {
    const auto lvl = std::to_string(l);
    enc_a_[l] = add_conv(store_, "enc" + lvl + ".a", in, w[l], 3);
    enc_b_[l] = add_conv(store_, "enc" + lvl + ".b", w[l], w[l], 3);
    in = w[l];
  }
  mid_a_ = add_conv(store_, "mid.a", w[3], w[3], 3);
  mid_b_ = add_conv(store_, "mid.b", w[3], w[3], 3);
  for (int l = 0; l < 4; ++l) {
    const auto lvl = std::to_string(l);
    const auto c = static_cast<std::size_t>(w[l]);
    const auto r = c / static_cast<std::size_t>(cfg.seb_reduction);
    seb_w1_[l] = store_.add("seb" + lvl + ".w1", {r, c, 1, 1});
    seb_w2_[l] = store_.add("seb" + lvl + ".w2", {c, r, 1, 1});
  }
  for (int l = 3; l >= 0; --l) {
    const auto lvl = std::to_string(l);
    const int prev = l == 3 ? w[3] : w[l + 1];
    dec_up_[l] = add_conv(store_, "dec" + lvl + ".up", prev, w[l], 3);
    dec_fuse_[l] = add_conv(store_, "dec" + lvl + ".fuse", 2 * w[l], w[l], 3);
  }
  out_ = add_conv(store_, "out", w[0], 3, 3);
}

template <class T>
UNet<T>::UNet(const UNetConfig& cfg, std::uint64_t seed) : UNet(cfg) {
  store_.init_uniform(seed, {"out."});
}

template <class T>
UNet<T> UNet<T>::zeros(const UNetConfig& cfg) {
  return UNet(cfg);
}

template <class T>
SebParams<T> UNet<T>::seb(int level) const {
  return {store_[seb_w1_[level]], store_[seb_w2_[level]]};
}

template <class T>
Tensor<T> UNet<T>::forward(Graph<T>* g, const Tensor<T>& img) const {
  require_image(img, 3, 16, "unet");
  std::array<Tensor<T>, 4> skips;
  Tensor<T> x = img;
  for (int l = 0; l < 4; ++l) {
    if (l > 0) x = down(g, x);
    x = conv3_relu(g, store_, enc_b_[l], conv3_relu(g, store_, enc_a_[l], x));
    skips[l] = x;
  }
  x = down(g, x);
  x = conv3_relu(g, store_, mid_b_, conv3_relu(g, store_, mid_a_, x));
  for (int l = 3; l >= 0; --l) {
    auto u = conv3_relu(g, store_, dec_up_[l], up(g, x));
    auto gated = seb_block(g, skips[l], seb(l));
    x = conv3_relu(g, store_, dec_fuse_[l], ops::concat_channels(g, u, gated));
  }
  return ops::add(g, img, conv3(g, store_, out_, x));
}

template <class T>
template <class U>
UNet<U> UNet<T>::cast() const {
  auto out = UNet<U>::zeros(cfg_);
  auto converted = cast_params<U>(store_.list());
  auto& dst = out.params();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto src = converted[i].tensor.data();
    std::copy(src.begin(), src.end(), dst[i].tensor.mutable_data().begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
ColorizerStub<T>::ColorizerStub(const StubConfig& cfg) : cfg_(cfg) {
  const auto& w = cfg.widths;
  for (int c : w)
    if (c <= 0) throw invalid_argument("stub widths must be positive");
  enc_[0] = add_conv(store_, "enc0", 1, w[0], 3);
  enc_[1] = add_conv(store_, "enc1", w[0], w[1], 3);
  enc_[2] = add_conv(store_, "enc2", w[1], w[2], 3);
  mid_ = add_conv(store_, "mid", w[2], w[2], 3);
  dec_[2] = add_conv(store_, "dec2", 2 * w[2], w[1], 3);
  dec_[1] = add_conv(store_, "dec1", 2 * w[1], w[0], 3);
  dec_[0] = add_conv(store_, "dec0", 2 * w[0], w[0], 3);
  out_ = add_conv(store_, "out", w[0], 3, 3);
}

template <class T>
ColorizerStub<T>::ColorizerStub(const StubConfig& cfg, std::uint64_t seed)
    : ColorizerStub(cfg) {
  store_.init_uniform(seed, {});
}

template <class T>
ColorizerStub<T> ColorizerStub<T>::zeros(const StubConfig& cfg) {
  return ColorizerStub(cfg);
}

template <class T>
Tensor<T> ColorizerStub<T>::forward(Graph<T>* g, const Tensor<T>& gray) const {
  require_image(gray, 1, 8, "stub");
  std::array<Tensor<T>, 3> skips;
  Tensor<T> x = gray;
  for (int l = 0; l < 3; ++l) {
    if (l > 0) x = down(g, x);
    x = conv3_relu(g, store_, enc_[l], x);
    skips[l] = x;
  }
  x = conv3_relu(g, store_, mid_, down(g, x));
  for (int l = 2; l >= 0; --l)
    x = conv3_relu(g, store_, dec_[l], ops::concat_channels(g, up(g, x), skips[l]));
  auto out = conv3(g, store_, out_, x);
  return cfg_.band_domain ? out : ops::sigmoid(g, out);
}

template <class T>
template <class U>
ColorizerStub<U> ColorizerStub<T>::cast() const {
  auto out = ColorizerStub<U>::zeros(cfg_);
  auto converted = cast_params<U>(store_.list());
  auto& dst = out.params();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto src = converted[i].tensor.data();
    std::copy(src.begin(), src.end(), dst[i].tensor.mutable_data().begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
CastCorrector<T>::CastCorrector(const CastConfig& cfg) : cfg_(cfg) {
  const auto& w = cfg.widths;
  for (int c : w)
    if (c <= 0) throw invalid_argument("cast corrector widths must be positive");
  enc_[0] = add_conv(store_, "enc0", 3, w[0], 3);
  enc_[1] = add_conv(store_, "enc1", w[0], w[1], 3);
  enc_[2] = add_conv(store_, "enc2", w[1], w[2], 3);
  mid_ = add_conv(store_, "mid", w[2], w[2], 3);
  const auto fc_in = static_cast<std::size_t>(3 * region_count(cfg.scheme));
  fc_.weight = store_.add("fc_inject.weight", {static_cast<std::size_t>(w[2]), fc_in});
  fc_.bias = store_.add("fc_inject.bias", {static_cast<std::size_t>(w[2])});
  dec_[2] = add_conv(store_, "dec2", w[2], w[1], 3);
  dec_[1] = add_conv(store_, "dec1", w[1], w[0], 3);
  dec_[0] = add_conv(store_, "dec0", w[0], w[0], 3);
  out_ = add_conv(store_, "out", w[0], 3, 3);
}

template <class T>
CastCorrector<T>::CastCorrector(const CastConfig& cfg, std::uint64_t seed)
    : CastCorrector(cfg) {
  store_.init_uniform(seed, {"out."});
}

template <class T>
CastCorrector<T> CastCorrector<T>::zeros(const CastConfig& cfg) {
  return CastCorrector(cfg);
}

template <class T>
std::size_t CastCorrector<T>::mean_length() const {
  return static_cast<std::size_t>(3 * region_count(cfg_.scheme));
}

template <class T>
Tensor<T> CastCorrector<T>::forward(Graph<T>* g, const Tensor<T>& img,
                                    const Tensor<T>& means) const {
  require_image(img, 3, 8, "cast");
  if (means.rank() != 1 || means.dim(0) != mean_length())
    throw shape_error("cast: mean vector length expected " + std::to_string(mean_length()) +
                      " (scheme " + cfg_.scheme.name() + "), got " +
                      std::to_string(means.numel()));
  Tensor<T> x = img;
  for (int l = 0; l < 3; ++l) {
    if (l > 0) x = down(g, x);
    x = conv3_relu(g, store_, enc_[l], x);
  }
  x = conv3_relu(g, store_, mid_, down(g, x));
  const auto injected = ops::linear(g, means, store_[fc_.weight], store_[fc_.bias]);
  x = ops::add_channel_vector(g, x, injected);
  for (int l = 2; l >= 0; --l) x = conv3_relu(g, store_, dec_[l], up(g, x));
  return ops::add(g, img, conv3(g, store_, out_, x));
}

template <class T>
template <class U>
CastCorrector<U> CastCorrector<T>::cast() const {
  auto out = CastCorrector<U>::zeros(cfg_);
  auto converted = cast_params<U>(store_.list());
  auto& dst = out.params();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto src = converted[i].tensor.data();
    std::copy(src.begin(), src.end(), dst[i].tensor.mutable_data().begin());
  }
  return out;
}

template Tensor<float> seb_gate(Graph<float>*, const Tensor<float>&, const SebParams<float>&);
template Tensor<double> seb_gate(Graph<double>*, const Tensor<double>&, const SebParams<double>&);
template Tensor<float> seb_block(Graph<float>*, const Tensor<float>&, const SebParams<float>&);
template Tensor<double> seb_block(Graph<double>*, const Tensor<double>&,
                                  const SebParams<double>&);

template class ParamStore<float>;
template class ParamStore<double>;
template class UNet<float>;
template class UNet<double>;
template class ColorizerStub<float>;
template class ColorizerStub<double>;
template class CastCorrector<float>;
template class CastCorrector<double>;

template UNet<double> UNet<float>::cast<double>() const;
template UNet<float> UNet<double>::cast<float>() const;
template UNet<float> UNet<float>::cast<float>() const;
template ColorizerStub<double> ColorizerStub<float>::cast<double>() const;
template ColorizerStub<float> ColorizerStub<double>::cast<float>() const;
template ColorizerStub<float> ColorizerStub<float>::cast<float>() const;
template CastCorrector<double> CastCorrector<float>::cast<double>() const;
template CastCorrector<float> CastCorrector<double>::cast<float>() const;
template CastCorrector<float> CastCorrector<float>::cast<float>() const;

}  // namespace bandtint
