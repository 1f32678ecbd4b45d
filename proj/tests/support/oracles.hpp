#pragma once

// Direct reference computations the library results are checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "bandtint/image.hpp"
#include "bandtint/random.hpp"
#include "bandtint/tensor.hpp"

namespace oracle {

using bandtint::PlanarImage;
using bandtint::Rng;

inline std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Uniform magnitudes in [gap, 1] with random sign, keeping clear of kinks at 0.
inline std::vector<double> signed_away_from_zero(std::size_t n, Rng& rng, double gap = 0.05) {
  std::vector<double> v(n);
  for (auto& x : v) {
    const double m = rng.uniform(gap, 1.0);
    x = rng.uniform() < 0.5 ? -m : m;
  }
  return v;
}

template <class T>
bandtint::Tensor<T> random_tensor(bandtint::Shape shape, Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
  const auto n = bandtint::shape_numel(shape);
  std::vector<T> data(n);
  for (auto& x : data) x = static_cast<T>(rng.uniform(lo, hi));
  return bandtint::Tensor<T>(std::move(shape), std::move(data));
}

inline PlanarImage random_image(int c, int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  PlanarImage img(c, h, w);
  for (auto& v : img.planes()) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

/// Deterministic test patterns: 0 constant, 1 checkerboard, 2 vertical step
/// edge, 3 centered impulse, 4 diagonal ramp, 5 disc, anything else noise.
inline PlanarImage pattern_image(int kind, int c, int h, int w, Rng& rng) {
  PlanarImage img(c, h, w);
  const double level = rng.uniform(0.1, 0.9);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        switch (kind) {
          case 0: v = level; break;
          case 1: v = ((y + x) % 2) ? 1.0 : 0.0; break;
          case 2: v = x >= w / 2 ? 1.0 : 0.0; break;
          case 3: v = (y == h / 2 && x == w / 2) ? 1.0 : 0.0; break;
          case 4: v = static_cast<double>(x + y) / (h + w - 2); break;
          case 5: {
            const double dy = y - h / 2.0, dx = x - w / 2.0;
            v = dy * dy + dx * dx < h * w / 16.0 ? level : 1.0 - level;
            break;
          }
          default: v = rng.uniform(); break;
        }
        img.at(ch, y, x) = static_cast<float>(v);
      }
  return img;
}

/// Six nested loops: output channel, rows, columns, input channel, kernel rows, kernel columns.
inline std::vector<double> conv2d(const std::vector<double>& in, int cin, int h, int w,
                                  const std::vector<double>& kernel, int cout, int k,
                                  const std::vector<double>& bias, int stride, int pad) {
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(cout) * ho * wo);
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        double acc = bias[co];
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = y * stride + ky - pad, ix = x * stride + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in[(ci * h + iy) * w + ix] * kernel[((co * cin + ci) * k + ky) * k + kx];
            }
        out[(co * ho + y) * wo + x] = acc;
      }
  return out;
}

/// X[u,v] = sum_y sum_x f(y,x) exp(-2πi (ku·y/H + kv·x/W)) with bin (u, v)
/// holding frequency (u − H/2, v − W/2).
inline std::vector<std::complex<double>> dft2_centered(const std::vector<double>& img, int h,
                                                       int w) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(h) * w);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      const int ku = u - h / 2, kv = v - w / 2;
      std::complex<double> acc = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double phase = -two_pi * (static_cast<double>(ku) * y / h +
                                          static_cast<double>(kv) * x / w);
          acc += img[y * w + x] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
      out[u * w + v] = acc;
    }
  return out;
}

inline double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

/// Sliding 11×11 Gaussian (σ = 1.5) windows over valid positions, K1 = 0.01,
/// K2 = 0.03, averaged over positions and channels.
inline double ssim(const PlanarImage& a, const PlanarImage& b) {
  constexpr int k = 11;
  constexpr double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  double wsum = 0.0;
  double win[k][k];
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) {
      const double dy = y - 5, dx = x - 5;
      win[y][x] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      wsum += win[y][x];
    }
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y0 = 0; y0 + k <= a.height(); ++y0)
      for (int x0 = 0; x0 + k <= a.width(); ++x0) {
        double ma = 0, mb = 0;
        for (int y = 0; y < k; ++y)
          for (int x = 0; x < k; ++x) {
            const double wt = win[y][x] / wsum;
            ma += wt * a.at(c, y0 + y, x0 + x);
            mb += wt * b.at(c, y0 + y, x0 + x);
          }
        double va = 0, vb = 0, cov = 0;
        for (int y = 0; y < k; ++y)
          for (int x = 0; x < k; ++x) {
            const double wt = win[y][x] / wsum;
            const double da = a.at(c, y0 + y, x0 + x) - ma;
            const double db = b.at(c, y0 + y, x0 + x) - mb;
            va += wt * da * da;
            vb += wt * db * db;
            cov += wt * da * db;
          }
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

/// PSNR over the given channel range on values clamped to [0, 1].
inline double psnr(const PlanarImage& a, const PlanarImage& b, int c0, int c1) {
  double se = 0.0;
  long n = 0;
  for (int c = c0; c < c1; ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double d = std::clamp<double>(a.at(c, y, x), 0.0, 1.0) -
                         std::clamp<double>(b.at(c, y, x), 0.0, 1.0);
        se += d * d;
        ++n;
      }
  const double mse = se / static_cast<double>(n);
  return mse <= 1e-12 ? INFINITY : 10.0 * std::log10(1.0 / mse);
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace oracle
