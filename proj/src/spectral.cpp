#include "bandtint/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bandtint {
namespace {

using Complex = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles straight from the angle avoid accumulated rotation error.
        const Complex w = std::polar(1.0, ang * static_cast<double>(k));
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

void fft_bluestein(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto k2 = (static_cast<unsigned long long>(k) * k) % (2ULL * n);
    chirp[k] = std::polar(1.0, sign * std::numbers::pi * static_cast<double>(k2) /
                                   static_cast<double>(n));
  }
  std::vector<Complex> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);
  fft_radix2(x, false);
  fft_radix2(y, false);
  for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
  fft_radix2(x, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

// Unscaled 2-D transform over a natural-order (DC at 0,0) buffer.
void fft2_natural(std::vector<Complex>& data, int h, int w, bool inverse) {
  std::vector<Complex> line(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(y) * w, w, line.begin());
    fft_inplace(line, inverse);
    std::copy(line.begin(), line.end(), data.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  line.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) line[y] = data[static_cast<std::size_t>(y) * w + x];
    fft_inplace(line, inverse);
    for (int y = 0; y < h; ++y) data[static_cast<std::size_t>(y) * w + x] = line[y];
  }
}

// Centered position of natural frequency index u along an axis of length n.
int centered(int u, int n) { return (u + n / 2) % n; }

std::vector<Complex> natural_spectrum(const float* plane, int h, int w) {
  std::vector<Complex> data(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = plane[i];
  fft2_natural(data, h, w, false);
  return data;
}

std::vector<float> masked_inverse(const std::vector<Complex>& spectrum,
                                  const std::vector<std::uint8_t>& centered_mask, int h,
                                  int w) {
  std::vector<Complex> data(spectrum.size());
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      const std::size_t nat = static_cast<std::size_t>(u) * w + v;
      const std::size_t cen = static_cast<std::size_t>(centered(u, h)) * w + centered(v, w);
      data[nat] = centered_mask[cen] ? spectrum[nat] : Complex{};
    }
  fft2_natural(data, h, w, true);
  const double scale = 1.0 / (static_cast<double>(h) * w);
  std::vector<float> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    out[i] = static_cast<float>(data[i].real() * scale);
  return out;
}

}  // namespace

void fft_inplace(std::vector<Complex>& data, bool inverse) {
  if (data.size() <= 1) return;
  if (is_pow2(data.size())) fft_radix2(data, inverse);
  else fft_bluestein(data, inverse);
}

Spectrum fft2(const PlanarImage& gray) {
  if (gray.channels() != 1)
    throw invalid_argument("fft2 needs a single-channel image, got " +
                           std::to_string(gray.channels()));
  if (gray.height() < 2 || gray.width() < 2)
    throw invalid_argument("fft2 needs extents of at least 2");
  const int h = gray.height(), w = gray.width();
  const auto natural = natural_spectrum(gray.planes().data(), h, w);
  Spectrum s{h, w, std::vector<Complex>(natural.size())};
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v)
      s.at(centered(u, h), centered(v, w)) = natural[static_cast<std::size_t>(u) * w + v];
  return s;
}

PlanarImage ifft2(const Spectrum& spectrum, double* max_imag) {
  const int h = spectrum.height, w = spectrum.width;
  if (h < 2 || w < 2 || spectrum.bins.size() != static_cast<std::size_t>(h) * w)
    throw invalid_argument("ifft2: malformed spectrum");
  std::vector<Complex> data(spectrum.bins.size());
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v)
      data[static_cast<std::size_t>(u) * w + v] = spectrum.at(centered(u, h), centered(v, w));
  fft2_natural(data, h, w, true);
  const double scale = 1.0 / (static_cast<double>(h) * w);
  PlanarImage out(1, h, w);
  double residue = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.planes()[i] = static_cast<float>(data[i].real() * scale);
    residue = std::max(residue, std::abs(data[i].imag() * scale));
  }
  if (max_imag) *max_imag = residue;
  return out;
}

void BandSpec::validate() const {
  if (!(r_low > 0.0) || !std::isfinite(r_low))
    throw invalid_argument("r_low must be positive, got " + std::to_string(r_low));
  if (!(r_mid > r_low) || !std::isfinite(r_mid))
    throw invalid_argument("r_mid (" + std::to_string(r_mid) + ") must exceed r_low (" +
                           std::to_string(r_low) + ")");
}

BandSpec scaled_band_spec(int size) {
  auto scale = [size](double r) {
    return std::max(2.0, std::round(r * static_cast<double>(size) / 256.0));
  };
  BandSpec spec{scale(30.0), scale(90.0)};
  if (spec.r_mid <= spec.r_low) spec.r_mid = spec.r_low + 1.0;
  return spec;
}

const char* band_name(Band band) {
  switch (band) {
    case Band::kLow: return "low";
    case Band::kMid: return "mid";
    case Band::kHigh: return "high";
  }
  return "?";
}

BandMasks make_masks(int height, int width, const BandSpec& spec) {
  spec.validate();
  if (height < 1 || width < 1) throw invalid_argument("make_masks: extents must be positive");
  BandMasks m{height, width, {}};
  const std::size_t n = static_cast<std::size_t>(height) * width;
  for (auto& mask : m.masks) mask.assign(n, 0);
  const double low2 = spec.r_low * spec.r_low, mid2 = spec.r_mid * spec.r_mid;
  for (int u = 0; u < height; ++u)
    for (int v = 0; v < width; ++v) {
      const double du = u - height / 2, dv = v - width / 2;
      const double r2 = du * du + dv * dv;
      const std::size_t i = static_cast<std::size_t>(u) * width + v;
      const int band = r2 < low2 ? 0 : (r2 < mid2 ? 1 : 2);
      m.masks[band][i] = 1;
    }
  return m;
}

const PlanarImage& BandSet::operator[](Band b) const {
  switch (b) {
    case Band::kLow: return low;
    case Band::kMid: return mid;
    case Band::kHigh: return high;
  }
  throw invalid_argument("unknown band");
}

BandSet split_bands(const PlanarImage& img, const BandSpec& spec) {
  const int h = img.height(), w = img.width(), c = img.channels();
  const auto masks = make_masks(h, w, spec);
  BandSet set{PlanarImage(c, h, w, false), PlanarImage(c, h, w, true),
              PlanarImage(c, h, w, true), spec};
  PlanarImage* outs[3] = {&set.low, &set.mid, &set.high};
  const std::size_t n = img.plane_size();
  for (int ch = 0; ch < c; ++ch) {
    const auto spectrum = natural_spectrum(img.planes().data() + ch * n, h, w);
    for (int b = 0; b < 3; ++b) {
      const auto band = masked_inverse(spectrum, masks.masks[b], h, w);
      std::copy(band.begin(), band.end(), outs[b]->planes().begin() + static_cast<std::ptrdiff_t>(ch * n));
    }
  }
  return set;
}

PlanarImage recombine(const PlanarImage& low, const PlanarImage& mid, const PlanarImage& high,
                      bool clamp) {
  if (!low.same_extent(mid) || !low.same_extent(high) || low.channels() != mid.channels() ||
      low.channels() != high.channels())
    throw shape_error("recombine: band extents differ");
  PlanarImage out(low.channels(), low.height(), low.width());
  for (std::size_t i = 0; i < out.planes().size(); ++i) {
    const float v = low.planes()[i] + mid.planes()[i] + high.planes()[i];
    out.planes()[i] = clamp ? std::clamp(v, 0.0f, 1.0f) : v;
  }
  return out;
}

PlanarImage recombine(const BandSet& bands, bool clamp) {
  return recombine(bands.low, bands.mid, bands.high, clamp);
}

std::array<double, 3> band_energies(const PlanarImage& img, const BandSpec& spec) {
  const int h = img.height(), w = img.width();
  const auto masks = make_masks(h, w, spec);
  std::array<double, 3> energy{};
  for (int ch = 0; ch < img.channels(); ++ch) {
    const auto s = fft2(img.channel(ch));
    for (std::size_t i = 0; i < s.bins.size(); ++i)
      for (int b = 0; b < 3; ++b)
        if (masks.masks[b][i]) energy[b] += std::norm(s.bins[i]);
  }
  return energy;
}

}  // namespace bandtint
