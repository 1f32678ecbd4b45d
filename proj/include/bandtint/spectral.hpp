#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "bandtint/image.hpp"

namespace bandtint {

/// 2-D spectrum with the DC bin at (height/2, width/2).
struct Spectrum {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double>& at(int u, int v) {
    return bins[static_cast<std::size_t>(u) * width + v];
  }
  const std::complex<double>& at(int u, int v) const {
    return bins[static_cast<std::size_t>(u) * width + v];
  }
};

/// In-place unscaled 1-D DFT. Power-of-two lengths use radix-2; other lengths
/// go through Bluestein's chirp-z convolution.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

/// Forward transform of a single-channel image (unscaled).
Spectrum fft2(const PlanarImage& gray);
/// Inverse transform scaled by 1/(H·W). `max_imag`, when given, receives the
/// largest imaginary residue.
PlanarImage ifft2(const Spectrum& spectrum, double* max_imag = nullptr);

/// Radii in frequency bins from the centered DC.
struct BandSpec {
  double r_low = 30.0;
  double r_mid = 90.0;

  void validate() const;
};

/// Default radii (30, 90) rescaled from a 256-pixel reference to `size`,
/// rounded, never below 2.
BandSpec scaled_band_spec(int size);

enum class Band { kLow = 0, kMid = 1, kHigh = 2 };
const char* band_name(Band band);

struct BandMasks {
  int height = 0;
  int width = 0;
  std::array<std::vector<std::uint8_t>, 3> masks;

  const std::vector<std::uint8_t>& operator[](Band b) const {
    return masks[static_cast<int>(b)];
  }
};

/// Hard circular masks: low = [r < r_low], mid = [r_low <= r < r_mid],
/// high = [r >= r_mid].
BandMasks make_masks(int height, int width, const BandSpec& spec);

struct BandSet {
  PlanarImage low;
  PlanarImage mid;
  PlanarImage high;
  BandSpec spec;

  const PlanarImage& operator[](Band b) const;
};

BandSet split_bands(const PlanarImage& img, const BandSpec& spec);

/// Pointwise sum of the bands, clamped to [0,1] only when `clamp` is set.
PlanarImage recombine(const PlanarImage& low, const PlanarImage& mid,
                      const PlanarImage& high, bool clamp = false);
PlanarImage recombine(const BandSet& bands, bool clamp = false);

/// Spectral energy sum |X|^2 inside each mask, summed over channels.
std::array<double, 3> band_energies(const PlanarImage& img, const BandSpec& spec);

}  // namespace bandtint
