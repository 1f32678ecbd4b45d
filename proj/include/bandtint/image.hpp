#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "bandtint/tensor.hpp"

namespace bandtint {

/// Channel-planar float image (C×H×W, row-major per plane).
///
/// Natural images hold values in [0, 1]. Frequency-band images may be signed
/// or exceed 1 and carry band_domain = true.
class PlanarImage {
 public:
  PlanarImage() = default;
  PlanarImage(int channels, int height, int width, bool band_domain = false);
  PlanarImage(int channels, int height, int width, std::vector<float> planes,
              bool band_domain = false);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const noexcept { return planes_.empty(); }

  bool band_domain() const noexcept { return band_domain_; }
  void set_band_domain(bool flag) noexcept { band_domain_ = flag; }

  float& at(int c, int y, int x) {
    return planes_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  float at(int c, int y, int x) const {
    return planes_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::vector<float>& planes() noexcept { return planes_; }
  const std::vector<float>& planes() const noexcept { return planes_; }

  /// One channel as a single-channel image.
  PlanarImage channel(int c) const;

  bool same_extent(const PlanarImage& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> planes_;
  bool band_domain_ = false;
};

/// Rec. 601 luma of an RGB image.
PlanarImage to_gray(const PlanarImage& rgb);

PlanarImage clamp01(const PlanarImage& img);

/// v -> 0.5·v + 0.5, the display mapping used for signed band images.
PlanarImage display_map(const PlanarImage& band);
/// Inverse of display_map; the result is flagged band_domain.
PlanarImage display_unmap(const PlanarImage& shown);

/// Reads an 8-bit grayscale or RGB PNG (alpha is dropped) to [0,1] floats.
PlanarImage load_image(const std::filesystem::path& path);
/// Writes an 8-bit PNG; values are clamped to [0,1] and rounded to v·255.
void save_image(const PlanarImage& img, const std::filesystem::path& path);

/// Rounds values to the nearest 8-bit level, as a save/load round trip would.
PlanarImage quantize8(const PlanarImage& img);

template <class T>
Tensor<T> to_tensor(const PlanarImage& img);

PlanarImage from_tensor(const Tensor<float>& t, bool band_domain = false);

}  // namespace bandtint
