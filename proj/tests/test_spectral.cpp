#include <cmath>
#include <complex>

#include "doctest.h"

#include "bandtint/spectral.hpp"
#include "oracles.hpp"

using namespace bandtint;

namespace {

std::vector<double> plane(const PlanarImage& img) { return {img.planes().begin(), img.planes().end()}; }

int oracle_band(int u, int v, int h, int w, const BandSpec& spec) {
  const double du = u - h / 2, dv = v - w / 2;
  const double r = std::sqrt(du * du + dv * dv);
  return r < spec.r_low ? 0 : r < spec.r_mid ? 1 : 2;
}

}  // namespace

TEST_CASE("fft of a constant is a DC spike") {
  const float c = 0.37f;
  PlanarImage img(1, 16, 16, std::vector<float>(256, c));
  const auto s = fft2(img);
  for (int u = 0; u < 16; ++u)
    for (int v = 0; v < 16; ++v) {
      const double mag = std::abs(s.at(u, v));
      if (u == 8 && v == 8) CHECK(mag == doctest::Approx(double(c) * 256).epsilon(1e-9));
      else CHECK(mag <= 1e-6);
    }
}

TEST_CASE("fft round trip on random 32x32") {
  Rng rng(1);
  const auto img = oracle::random_image(1, 32, 32, rng);
  double imag = 1.0;
  const auto back = ifft2(fft2(img), &imag);
  CHECK(oracle::max_abs_diff(back.planes(), img.planes()) < 1e-6);
  CHECK(imag <= 1e-6);
}

TEST_CASE("fft matches the direct DFT") {
  Rng rng(2);
  // 8x8 power of two, then non-power-of-two extents through Bluestein.
  for (auto [h, w] : {std::pair{8, 8}, std::pair{6, 10}, std::pair{7, 5}, std::pair{12, 16}}) {
    const auto img = oracle::random_image(1, h, w, rng);
    const auto got = fft2(img);
    const auto want = oracle::dft2_centered(plane(img), h, w);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.bins[i] - want[i]) < 1e-6);
    CHECK(oracle::max_abs_diff(ifft2(got).planes(), img.planes()) < 1e-6);
  }
}

TEST_CASE("1-D transform of odd length matches the naive sum") {
  Rng rng(3);
  std::vector<std::complex<double>> x(7);
  for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto y = x;
  fft_inplace(y, false);
  for (int k = 0; k < 7; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < 7; ++n) acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / 7);
    CHECK(std::abs(y[k] - acc) < 1e-9);
  }
  fft_inplace(y, true);
  for (int n = 0; n < 7; ++n) CHECK(std::abs(y[n] / 7.0 - x[n]) < 1e-12);
}

TEST_CASE("masks partition the spectrum") {
  for (const BandSpec spec : {BandSpec{30, 90}, BandSpec{8, 23}, BandSpec{2.5, 3.0}}) {
    for (auto [h, w] : {std::pair{64, 64}, std::pair{31, 48}}) {
      const auto m = make_masks(h, w, spec);
      for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
          const std::size_t i = static_cast<std::size_t>(u) * w + v;
          CHECK(m.masks[0][i] + m.masks[1][i] + m.masks[2][i] == 1);
          CHECK(m.masks[oracle_band(u, v, h, w, spec)][i] == 1);
        }
      CHECK(m[Band::kLow][static_cast<std::size_t>(h / 2) * w + w / 2] == 1);
    }
  }
}

TEST_CASE("corner bin of a 64x64 spectrum is mid band at the full-size radii") {
  const auto m = make_masks(64, 64, BandSpec{30, 90});
  // Distance from (32, 32) to (0, 0) is 45.25.
  CHECK(m[Band::kMid][0] == 1);
  CHECK(m[Band::kLow][0] == 0);
  CHECK(m[Band::kHigh][0] == 0);
}

TEST_CASE("band spec validation and scaling") {
  CHECK_THROWS_AS(make_masks(8, 8, BandSpec{5, 5}), Error);
  CHECK_THROWS_AS(make_masks(8, 8, BandSpec{6, 2}), Error);
  CHECK_THROWS_AS(make_masks(8, 8, BandSpec{0, 2}), Error);
  const auto s64 = scaled_band_spec(64);
  CHECK(s64.r_low == 8.0);
  CHECK(s64.r_mid == 23.0);
  const auto s256 = scaled_band_spec(256);
  CHECK(s256.r_low == 30.0);
  CHECK(s256.r_mid == 90.0);
  CHECK(scaled_band_spec(8).r_low == 2.0);
}

TEST_CASE("constant image lives entirely in the low band") {
  PlanarImage img(3, 16, 16, std::vector<float>(3 * 256, 0.6f));
  const auto b = split_bands(img, scaled_band_spec(16));
  for (float v : b.low.planes()) CHECK(std::abs(v - 0.6f) <= 1e-6);
  for (float v : b.mid.planes()) CHECK(std::abs(v) <= 1e-6);
  for (float v : b.high.planes()) CHECK(std::abs(v) <= 1e-6);
  CHECK(b.mid.band_domain());
  CHECK(b.high.band_domain());
}

TEST_CASE("perfect reconstruction") {
  Rng rng(4);
  for (int kind = 0; kind < 8; ++kind) {
    const auto img = oracle::pattern_image(kind, 3, 64, 64, rng);
    const auto b = split_bands(img, scaled_band_spec(64));
    CHECK(oracle::max_abs_diff(recombine(b).planes(), img.planes()) < 1e-5);
  }
  const auto odd = oracle::random_image(1, 30, 45, rng);
  CHECK(oracle::max_abs_diff(recombine(split_bands(odd, {4, 9})).planes(), odd.planes()) < 1e-5);
}

TEST_CASE("impulse bands match the direct DFT bin by bin") {
  constexpr int n = 64;
  PlanarImage img(1, n, n);
  img.at(0, n / 2, n / 2) = 1.0f;
  const auto spec = scaled_band_spec(n);
  const auto bands = split_bands(img, spec);
  const auto spectrum = oracle::dft2_centered(plane(img), n, n);

  std::array<double, 3> expected_energy{};
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) expected_energy[oracle_band(u, v, n, n, spec)] += std::norm(spectrum[u * n + v]);

  const auto energy = band_energies(img, spec);
  for (int b = 0; b < 3; ++b) {
    const auto& band = bands[static_cast<Band>(b)];
    const auto got = fft2(band);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        const auto want = oracle_band(u, v, n, n, spec) == b ? spectrum[u * n + v] : 0.0;
        CHECK(std::abs(got.at(u, v) - want) < 1e-5);
      }
    CHECK(energy[b] == doctest::Approx(expected_energy[b]).epsilon(1e-5));
    double spatial = 0.0;
    for (float x : band.planes()) spatial += double(x) * x;
    CHECK(spatial * n * n == doctest::Approx(expected_energy[b]).epsilon(1e-5));
  }
}

TEST_CASE("recombine") {
  Rng rng(5);
  const auto low = oracle::random_image(3, 8, 8, rng);
  const PlanarImage zeros(3, 8, 8, true);
  CHECK(recombine(low, zeros, zeros).planes() == low.planes());

  const auto board = oracle::pattern_image(1, 1, 16, 16, rng);
  const auto b = split_bands(board, {3, 6});
  const auto sum = recombine(b);
  for (std::size_t i = 0; i < sum.planes().size(); ++i)
    CHECK(sum.planes()[i] == b.low.planes()[i] + b.mid.planes()[i] + b.high.planes()[i]);

  PlanarImage big(1, 1, 2, {0.8f, -0.3f});
  const PlanarImage z(1, 1, 2, true);
  const auto clamped = recombine(big, big, z, true);
  CHECK(clamped.planes()[0] == 1.0f);
  CHECK(clamped.planes()[1] == 0.0f);
  CHECK_THROWS_AS(recombine(low, PlanarImage(3, 8, 4), zeros), Error);
}

TEST_CASE("Parseval") {
  Rng rng(6);
  const auto img = oracle::random_image(1, 32, 24, rng, -1, 1);
  const auto s = fft2(img);
  double spectral = 0.0, spatial = 0.0;
  for (const auto& c : s.bins) spectral += std::norm(c);
  for (float v : img.planes()) spatial += double(v) * v;
  CHECK(spectral == doctest::Approx(32.0 * 24.0 * spatial).epsilon(1e-5));
}

TEST_CASE("low band of a step edge rings") {
  Rng rng(7);
  const auto step = oracle::pattern_image(2, 1, 64, 64, rng);
  const auto b = split_bands(step, scaled_band_spec(64));
  const float peak = *std::max_element(b.low.planes().begin(), b.low.planes().end());
  CHECK(peak >= 1.0f + 1e-3f);
}
