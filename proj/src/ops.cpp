#include "bandtint/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bandtint::ops {
namespace {

thread_local KinkTrace* g_kink_trace = nullptr;

template <class T>
void check_finite(std::span<const T> values, const char* op) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw numeric_error(std::string(op) + ": non-finite value at index " +
                          std::to_string(i));
  }
}

}  // namespace

KinkTrace::KinkTrace() : previous_(g_kink_trace) { g_kink_trace = this; }
KinkTrace::~KinkTrace() { g_kink_trace = previous_; }

namespace {

template <class T>
Tensor<T> make_output(Shape shape, std::vector<T> data, const char* op) {
  check_finite<T>(data, op);
  return Tensor<T>(std::move(shape), std::move(data));
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw shape_error(std::string(op) + ": shape mismatch " +
                      shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <class T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* op,
                  const char* what) {
  if (t.rank() != rank)
    throw shape_error(std::string(op) + ": " + what + " must have rank " +
                      std::to_string(rank) + ", got " + shape_string(t.shape()));
}

struct ConvGeometry {
  int channels_in, height, width;
  int channels_out, k;
  int stride, pad;
  int out_h, out_w;

  // Output columns whose input column ox*stride + kx - pad is in range.
  std::pair<int, int> col_range(int kx) const {
    const int lo_num = pad - kx;
    const int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
    const int hi_num = width - 1 - kx + pad;
    const int hi = hi_num < 0 ? 0 : std::min(out_w, hi_num / stride + 1);
    return {lo, hi};
  }
};

template <class T>
void conv_forward(const ConvGeometry& geo, const T* x, const T* w, const T* b,
                  T* out) {
  const int plane = geo.out_h * geo.out_w;
  for (int o = 0; o < geo.channels_out; ++o) {
    T* out_plane = out + static_cast<std::size_t>(o) * plane;
    std::fill(out_plane, out_plane + plane, b[o]);
    for (int c = 0; c < geo.channels_in; ++c) {
      const T* x_plane = x + static_cast<std::size_t>(c) * geo.height * geo.width;
      const T* w_oc = w + (static_cast<std::size_t>(o) * geo.channels_in + c) * geo.k * geo.k;
      for (int ky = 0; ky < geo.k; ++ky) {
        for (int kx = 0; kx < geo.k; ++kx) {
          const T wv = w_oc[ky * geo.k + kx];
          if (wv == T(0)) continue;
          const auto [lo, hi] = geo.col_range(kx);
          const int shift = kx - geo.pad;
          for (int oy = 0; oy < geo.out_h; ++oy) {
            const int iy = oy * geo.stride + ky - geo.pad;
            if (iy < 0 || iy >= geo.height) continue;
            T* orow = out_plane + oy * geo.out_w;
            const T* irow = x_plane + iy * geo.width;
            if (geo.stride == 1) {
              for (int ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox + shift];
            } else {
              for (int ox = lo; ox < hi; ++ox)
                orow[ox] += wv * irow[ox * geo.stride + shift];
            }
          }
        }
      }
    }
  }
}

template <class T>
void conv_backward(const ConvGeometry& geo, const T* x, const T* w,
                   const T* gout, T* gx, T* gw, T* gb) {
  const int plane = geo.out_h * geo.out_w;
  for (int o = 0; o < geo.channels_out; ++o) {
    const T* g_plane = gout + static_cast<std::size_t>(o) * plane;
    if (gb) {
      T acc = 0;
      for (int i = 0; i < plane; ++i) acc += g_plane[i];
      gb[o] += acc;
    }
    for (int c = 0; c < geo.channels_in; ++c) {
      const std::size_t in_off = static_cast<std::size_t>(c) * geo.height * geo.width;
      const std::size_t w_off = (static_cast<std::size_t>(o) * geo.channels_in + c) * geo.k * geo.k;
      for (int ky = 0; ky < geo.k; ++ky) {
        for (int kx = 0; kx < geo.k; ++kx) {
          const auto [lo, hi] = geo.col_range(kx);
          const int shift = kx - geo.pad;
          const T wv = w[w_off + ky * geo.k + kx];
          T wacc = 0;
          for (int oy = 0; oy < geo.out_h; ++oy) {
            const int iy = oy * geo.stride + ky - geo.pad;
            if (iy < 0 || iy >= geo.height) continue;
            const T* grow = g_plane + oy * geo.out_w;
            const std::size_t row_off = in_off + static_cast<std::size_t>(iy) * geo.width;
            if (geo.stride == 1) {
              if (gw) {
                const T* irow = x + row_off;
                for (int ox = lo; ox < hi; ++ox) wacc += grow[ox] * irow[ox + shift];
              }
              if (gx && wv != T(0)) {
                T* gxrow = gx + row_off;
                for (int ox = lo; ox < hi; ++ox) gxrow[ox + shift] += wv * grow[ox];
              }
            } else {
              for (int ox = lo; ox < hi; ++ox) {
                const int ix = ox * geo.stride + shift;
                if (gw) wacc += grow[ox] * x[row_off + ix];
                if (gx) gx[row_off + ix] += wv * grow[ox];
              }
            }
          }
          if (gw) gw[w_off + ky * geo.k + kx] += wacc;
        }
      }
    }
  }
}

template <class T>
T* grad_or_null(const Tensor<T>& t) {
  return t.requires_grad() ? t.grad_buffer().data() : nullptr;
}

template <class T>
T stable_sigmoid(T x) {
  T s;
  if (x >= T(0)) {
    s = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  // Saturation must not reach the closed interval ends.
  constexpr T lo = std::numeric_limits<T>::min();
  const T hi = std::nextafter(T(1), T(0));
  return std::clamp(s, lo, hi);
}

}  // namespace

template <class T>
Tensor<T> conv2d(Graph<T>* g, const Tensor<T>& input, const Tensor<T>& kernel,
                 const Tensor<T>& bias, int stride, int padding) {
  constexpr const char* op = "conv2d";
  require_rank(input, 3, op, "input");
  require_rank(kernel, 4, op, "kernel");
  require_rank(bias, 1, op, "bias");
  if (stride < 1) throw invalid_argument("conv2d: stride must be positive");
  if (padding < 0) throw invalid_argument("conv2d: padding must be non-negative");
  ConvGeometry geo{};
  geo.channels_in = static_cast<int>(input.dim(0));
  geo.height = static_cast<int>(input.dim(1));
  geo.width = static_cast<int>(input.dim(2));
  geo.channels_out = static_cast<int>(kernel.dim(0));
  geo.k = static_cast<int>(kernel.dim(2));
  geo.stride = stride;
  geo.pad = padding;
  if (static_cast<int>(kernel.dim(1)) != geo.channels_in)
    throw shape_error("conv2d: kernel dim 1 (input channels) is " +
                      std::to_string(kernel.dim(1)) + " but input has " +
                      std::to_string(geo.channels_in) + " channels");
  if (kernel.dim(3) != kernel.dim(2))
    throw shape_error("conv2d: kernel dims 2 and 3 differ (" +
                      std::to_string(kernel.dim(2)) + " vs " +
                      std::to_string(kernel.dim(3)) + ")");
  if (geo.k % 2 == 0)
    throw shape_error("conv2d: kernel size " + std::to_string(geo.k) + " is even");
  if (static_cast<int>(bias.dim(0)) != geo.channels_out)
    throw shape_error("conv2d: bias dim 0 is " + std::to_string(bias.dim(0)) +
                      " but kernel has " + std::to_string(geo.channels_out) +
                      " output channels");
  const int span_h = geo.height + 2 * padding - geo.k;
  const int span_w = geo.width + 2 * padding - geo.k;
  if (span_h < 0 || span_h % stride != 0)
    throw shape_error("conv2d: height " + std::to_string(geo.height) +
                      " incompatible with kernel/stride/padding");
  if (span_w < 0 || span_w % stride != 0)
    throw shape_error("conv2d: width " + std::to_string(geo.width) +
                      " incompatible with kernel/stride/padding");
  geo.out_h = span_h / stride + 1;
  geo.out_w = span_w / stride + 1;

  std::vector<T> out(static_cast<std::size_t>(geo.channels_out) * geo.out_h * geo.out_w);
  conv_forward(geo, input.data().data(), kernel.data().data(), bias.data().data(),
               out.data());
  auto result = make_output<T>(
      {static_cast<std::size_t>(geo.channels_out), static_cast<std::size_t>(geo.out_h),
       static_cast<std::size_t>(geo.out_w)},
      std::move(out), op);
  if (should_record(g, {&input, &kernel, &bias})) {
    g->record({input, kernel, bias}, result,
              [geo, input, kernel, bias](std::span<const T> gout) mutable {
                conv_backward(geo, input.data().data(), kernel.data().data(),
                              gout.data(), grad_or_null(input),
                              grad_or_null(kernel), grad_or_null(bias));
              });
  }
  return result;
}

template <class T>
Tensor<T> linear(Graph<T>* g, const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias) {
  constexpr const char* op = "linear";
  require_rank(input, 1, op, "input");
  require_rank(weight, 2, op, "weight");
  require_rank(bias, 1, op, "bias");
  const std::size_t m = weight.dim(0), n = weight.dim(1);
  if (input.dim(0) != n)
    throw shape_error("linear: weight has " + std::to_string(n) +
                      " columns but input has length " + std::to_string(input.dim(0)));
  if (bias.dim(0) != m)
    throw shape_error("linear: bias length " + std::to_string(bias.dim(0)) +
                      " does not match " + std::to_string(m) + " weight rows");
  const auto x = input.data();
  const auto w = weight.data();
  const auto b = bias.data();
  std::vector<T> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    T acc = b[i];
    for (std::size_t j = 0; j < n; ++j) acc += w[i * n + j] * x[j];
    out[i] = acc;
  }
  auto result = make_output<T>({m}, std::move(out), op);
  if (should_record(g, {&input, &weight, &bias})) {
    g->record({input, weight, bias}, result,
              [m, n, input, weight, bias](std::span<const T> gy) mutable {
                const auto x = input.data();
                const auto w = weight.data();
                if (input.requires_grad()) {
                  auto gx = input.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gx[j] += w[i * n + j] * gy[i];
                }
                if (weight.requires_grad()) {
                  auto gw = weight.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += gy[i] * x[j];
                }
                if (bias.requires_grad()) {
                  auto gb = bias.grad_buffer();
                  for (std::size_t i = 0; i < m; ++i) gb[i] += gy[i];
                }
              });
  }
  return result;
}

template <class T>
Tensor<T> activation(Graph<T>* g, const Tensor<T>& input, Activation kind) {
  const auto x = input.data();
  std::vector<T> out(x.size());
  if (kind == Activation::kRelu) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
    if (auto* trace = g_kink_trace)
      for (T v : x) trace->note(v > T(0));
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_sigmoid(x[i]);
  }
  auto result = make_output<T>(input.shape(), std::move(out),
                               kind == Activation::kRelu ? "relu" : "sigmoid");
  if (should_record(g, {&input})) {
    g->record({input}, result,
              [kind, input, result](std::span<const T> gy) mutable {
                auto gx = input.grad_buffer();
                const auto x = input.data();
                const auto y = result.data();
                if (kind == Activation::kRelu) {
                  for (std::size_t i = 0; i < gx.size(); ++i)
                    if (x[i] > T(0)) gx[i] += gy[i];
                } else {
                  for (std::size_t i = 0; i < gx.size(); ++i)
                    gx[i] += gy[i] * y[i] * (T(1) - y[i]);
                }
              });
  }
  return result;
}

template <class T>
Tensor<T> resample(Graph<T>* g, const Tensor<T>& input, Resample kind) {
  require_rank(input, 3, "resample", "input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto x = input.data();
  if (kind == Resample::kDown2Mean) {
    if (h % 2 != 0 || w % 2 != 0)
      throw shape_error("resample: down2_mean needs even extents, got " +
                        shape_string(input.shape()));
    const std::size_t ho = h / 2, wo = w / 2;
    std::vector<T> out(c * ho * wo);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t xo = 0; xo < wo; ++xo) {
          const std::size_t base = (ch * h + 2 * y) * w + 2 * xo;
          out[(ch * ho + y) * wo + xo] =
              T(0.25) * (x[base] + x[base + 1] + x[base + w] + x[base + w + 1]);
        }
    auto result = make_output<T>({c, ho, wo}, std::move(out), "down2_mean");
    if (should_record(g, {&input})) {
      g->record({input}, result, [c, h, w, input](std::span<const T> gy) mutable {
        auto gx = input.grad_buffer();
        const std::size_t ho = h / 2, wo = w / 2;
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t y = 0; y < ho; ++y)
            for (std::size_t xo = 0; xo < wo; ++xo) {
              const T v = T(0.25) * gy[(ch * ho + y) * wo + xo];
              const std::size_t base = (ch * h + 2 * y) * w + 2 * xo;
              gx[base] += v;
              gx[base + 1] += v;
              gx[base + w] += v;
              gx[base + w + 1] += v;
            }
      });
    }
    return result;
  }

  const std::size_t ho = h * 2, wo = w * 2;
  std::vector<T> out(c * ho * wo);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xo = 0; xo < wo; ++xo)
        out[(ch * ho + y) * wo + xo] = x[(ch * h + y / 2) * w + xo / 2];
  auto result = make_output<T>({c, ho, wo}, std::move(out), "up2_nearest");
  if (should_record(g, {&input})) {
    g->record({input}, result, [c, h, w, input](std::span<const T> gy) mutable {
      auto gx = input.grad_buffer();
      const std::size_t ho = h * 2, wo = w * 2;
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < ho; ++y)
          for (std::size_t xo = 0; xo < wo; ++xo)
            gx[(ch * h + y / 2) * w + xo / 2] += gy[(ch * ho + y) * wo + xo];
    });
  }
  return result;
}

template <class T>
Tensor<T> add(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  const auto x = a.data(), y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  auto result = make_output<T>(a.shape(), std::move(out), "add");
  if (should_record(g, {&a, &b})) {
    g->record({a, b}, result, [a, b](std::span<const T> gy) mutable {
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> sub(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  const auto x = a.data(), y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  auto result = make_output<T>(a.shape(), std::move(out), "sub");
  if (should_record(g, {&a, &b})) {
    g->record({a, b}, result, [a, b](std::span<const T> gy) mutable {
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> mul(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  const auto x = a.data(), y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  auto result = make_output<T>(a.shape(), std::move(out), "mul");
  if (should_record(g, {&a, &b})) {
    g->record({a, b}, result, [a, b](std::span<const T> gy) mutable {
      const auto x = a.data(), y = b.data();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * x[i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> div(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "div");
  const auto x = a.data(), y = b.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[i];
  auto result = make_output<T>(a.shape(), std::move(out), "div");
  if (should_record(g, {&a, &b})) {
    g->record({a, b}, result, [a, b, result](std::span<const T> gy) mutable {
      const auto y = b.data(), q = result.data();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] / y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i] * q[i] / y[i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> affine(Graph<T>* g, const Tensor<T>& x, T a, T b) {
  const auto v = x.data();
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i] + b;
  auto result = make_output<T>(x.shape(), std::move(out), "affine");
  if (should_record(g, {&x})) {
    g->record({x}, result, [a, x](std::span<const T> gy) mutable {
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += a * gy[i];
    });
  }
  return result;
}

template <class T>
Tensor<T> clamp01(Graph<T>* g, const Tensor<T>& x) {
  const auto v = x.data();
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp(v[i], T(0), T(1));
  if (auto* trace = g_kink_trace)
    for (T e : v) trace->note(e < T(0) ? 0 : e > T(1) ? 2 : 1);
  auto result = make_output<T>(x.shape(), std::move(out), "clamp01");
  if (should_record(g, {&x})) {
    g->record({x}, result, [x](std::span<const T> gy) mutable {
      const auto v = x.data();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (v[i] >= T(0) && v[i] <= T(1)) gx[i] += gy[i];
    });
  }
  return result;
}

template <class T>
Tensor<T> sum(Graph<T>* g, const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  auto result = make_output<T>({1}, {acc}, "sum");
  if (should_record(g, {&x})) {
    g->record({x}, result, [x](std::span<const T> gy) mutable {
      auto gx = x.grad_buffer();
      for (auto& e : gx) e += gy[0];
    });
  }
  return result;
}

template <class T>
Tensor<T> mean(Graph<T>* g, const Tensor<T>& x) {
  const T n = static_cast<T>(x.numel());
  T acc = 0;
  for (T v : x.data()) acc += v;
  auto result = make_output<T>({1}, {acc / n}, "mean");
  if (should_record(g, {&x})) {
    g->record({x}, result, [x, n](std::span<const T> gy) mutable {
      auto gx = x.grad_buffer();
      const T v = gy[0] / n;
      for (auto& e : gx) e += v;
    });
  }
  return result;
}

template <class T>
Tensor<T> mean_abs_diff(Graph<T>* g, const Tensor<T>& pred, const Tensor<T>& target) {
  require_same_shape(pred, target, "mean_abs_diff");
  const auto p = pred.data(), t = target.data();
  const T n = static_cast<T>(p.size());
  T acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
  if (auto* trace = g_kink_trace)
    for (std::size_t i = 0; i < p.size(); ++i) trace->note(p[i] > t[i] ? 2 : p[i] < t[i] ? 0 : 1);
  auto result = make_output<T>({1}, {acc / n}, "mean_abs_diff");
  if (should_record(g, {&pred})) {
    g->record({pred, target}, result, [pred, target, n](std::span<const T> gy) mutable {
      const auto p = pred.data(), t = target.data();
      auto gp = pred.grad_buffer();
      const T v = gy[0] / n;
      for (std::size_t i = 0; i < gp.size(); ++i) {
        if (p[i] > t[i]) gp[i] += v;
        else if (p[i] < t[i]) gp[i] -= v;
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> concat_channels(Graph<T>* g, const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 3, "concat_channels", "first input");
  require_rank(b, 3, "concat_channels", "second input");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw shape_error("concat_channels: spatial mismatch " + shape_string(a.shape()) +
                      " vs " + shape_string(b.shape()));
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  auto result = make_output<T>({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)},
                               std::move(out), "concat_channels");
  if (should_record(g, {&a, &b})) {
    g->record({a, b}, result, [a, b](std::span<const T> gy) mutable {
      const std::size_t na = a.numel();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < na; ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[na + i];
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> add_channel_vector(Graph<T>* g, const Tensor<T>& x, const Tensor<T>& v) {
  require_rank(x, 3, "add_channel_vector", "feature map");
  require_rank(v, 1, "add_channel_vector", "vector");
  if (v.dim(0) != x.dim(0))
    throw shape_error("add_channel_vector: vector length " + std::to_string(v.dim(0)) +
                      " does not match " + std::to_string(x.dim(0)) + " channels");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  const auto xs = x.data(), vs = v.data();
  std::vector<T> out(xs.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] = xs[ch * plane + i] + vs[ch];
  auto result = make_output<T>(x.shape(), std::move(out), "add_channel_vector");
  if (should_record(g, {&x, &v})) {
    g->record({x, v}, result, [c, plane, x, v](std::span<const T> gy) mutable {
      if (x.requires_grad()) {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
      }
      if (v.requires_grad()) {
        auto gv = v.grad_buffer();
        for (std::size_t ch = 0; ch < c; ++ch) {
          T acc = 0;
          for (std::size_t i = 0; i < plane; ++i) acc += gy[ch * plane + i];
          gv[ch] += acc;
        }
      }
    });
  }
  return result;
}

template <class T>
Tensor<T> depthwise_filter(Graph<T>* g, const Tensor<T>& x, std::span<const T> window,
                           int k) {
  require_rank(x, 3, "depthwise_filter", "input");
  if (k < 1 || window.size() != static_cast<std::size_t>(k) * k)
    throw invalid_argument("depthwise_filter: window must hold k*k values");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto kk = static_cast<std::size_t>(k);
  if (h < kk || w < kk)
    throw shape_error("depthwise_filter: input " + shape_string(x.shape()) +
                      " smaller than window " + std::to_string(k));
  const std::size_t ho = h - kk + 1, wo = w - kk + 1;
  const auto xs = x.data();
  std::vector<T> out(c * ho * wo, T(0));
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ky = 0; ky < kk; ++ky)
      for (std::size_t kx = 0; kx < kk; ++kx) {
        const T wv = window[ky * kk + kx];
        for (std::size_t y = 0; y < ho; ++y) {
          T* orow = out.data() + (ch * ho + y) * wo;
          const T* irow = xs.data() + (ch * h + y + ky) * w + kx;
          for (std::size_t xo = 0; xo < wo; ++xo) orow[xo] += wv * irow[xo];
        }
      }
  auto result = make_output<T>({c, ho, wo}, std::move(out), "depthwise_filter");
  if (should_record(g, {&x})) {
    std::vector<T> win(window.begin(), window.end());
    g->record({x}, result, [c, h, w, kk, ho, wo, win, x](std::span<const T> gy) mutable {
      auto gx = x.grad_buffer();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t ky = 0; ky < kk; ++ky)
          for (std::size_t kx = 0; kx < kk; ++kx) {
            const T wv = win[ky * kk + kx];
            for (std::size_t y = 0; y < ho; ++y) {
              const T* grow = gy.data() + (ch * ho + y) * wo;
              T* gxrow = gx.data() + (ch * h + y + ky) * w + kx;
              for (std::size_t xo = 0; xo < wo; ++xo) gxrow[xo] += wv * grow[xo];
            }
          }
    });
  }
  return result;
}

#define BANDTINT_INSTANTIATE_OPS(T)                                                     \
  template Tensor<T> conv2d(Graph<T>*, const Tensor<T>&, const Tensor<T>&,              \
                            const Tensor<T>&, int, int);                                \
  template Tensor<T> linear(Graph<T>*, const Tensor<T>&, const Tensor<T>&,              \
                            const Tensor<T>&);                                          \
  template Tensor<T> activation(Graph<T>*, const Tensor<T>&, Activation);               \
  template Tensor<T> resample(Graph<T>*, const Tensor<T>&, Resample);                   \
  template Tensor<T> add(Graph<T>*, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> sub(Graph<T>*, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> mul(Graph<T>*, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> div(Graph<T>*, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> affine(Graph<T>*, const Tensor<T>&, T, T);                         \
  template Tensor<T> clamp01(Graph<T>*, const Tensor<T>&);                              \
  template Tensor<T> sum(Graph<T>*, const Tensor<T>&);                                  \
  template Tensor<T> mean(Graph<T>*, const Tensor<T>&);                                 \
  template Tensor<T> mean_abs_diff(Graph<T>*, const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> concat_channels(Graph<T>*, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> add_channel_vector(Graph<T>*, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> depthwise_filter(Graph<T>*, const Tensor<T>&, std::span<const T>, int);

BANDTINT_INSTANTIATE_OPS(float)
BANDTINT_INSTANTIATE_OPS(double)

#undef BANDTINT_INSTANTIATE_OPS

}  // namespace bandtint::ops
