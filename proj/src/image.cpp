#include "bandtint/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace bandtint {

PlanarImage::PlanarImage(int channels, int height, int width, bool band_domain)
    : PlanarImage(channels, height, width,
                  std::vector<float>(static_cast<std::size_t>(std::max(channels, 0)) *
                                     std::max(height, 0) * std::max(width, 0)),
                  band_domain) {}

PlanarImage::PlanarImage(int channels, int height, int width, std::vector<float> planes,
                         bool band_domain)
    : channels_(channels),
      height_(height),
      width_(width),
      planes_(std::move(planes)),
      band_domain_(band_domain) {
  if (channels != 1 && channels != 3)
    throw invalid_argument("image channels must be 1 or 3, got " + std::to_string(channels));
  if (height <= 0 || width <= 0)
    throw invalid_argument("image extents must be positive, got " + std::to_string(height) +
                           "x" + std::to_string(width));
  if (planes_.size() != static_cast<std::size_t>(channels) * height * width)
    throw shape_error("image data holds " + std::to_string(planes_.size()) +
                      " values, expected " +
                      std::to_string(static_cast<std::size_t>(channels) * height * width));
}

PlanarImage PlanarImage::channel(int c) const {
  if (c < 0 || c >= channels_) throw invalid_argument("channel index out of range");
  const auto begin = planes_.begin() + static_cast<std::ptrdiff_t>(c * plane_size());
  return PlanarImage(1, height_, width_,
                     std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(plane_size())),
                     band_domain_);
}

PlanarImage to_gray(const PlanarImage& rgb) {
  if (rgb.channels() != 3)
    throw invalid_argument("to_gray needs a 3-channel image, got " +
                           std::to_string(rgb.channels()));
  if (rgb.band_domain()) throw invalid_argument("to_gray on a band-domain image");
  PlanarImage out(1, rgb.height(), rgb.width());
  const std::size_t n = rgb.plane_size();
  const auto& p = rgb.planes();
  for (std::size_t i = 0; i < n; ++i) {
    const float v = 0.299f * p[i] + 0.587f * p[n + i] + 0.114f * p[2 * n + i];
    out.planes()[i] = std::clamp(v, 0.0f, 1.0f);
  }
  return out;
}

PlanarImage clamp01(const PlanarImage& img) {
  PlanarImage out = img;
  for (auto& v : out.planes()) v = std::clamp(v, 0.0f, 1.0f);
  out.set_band_domain(false);
  return out;
}

PlanarImage display_map(const PlanarImage& band) {
  PlanarImage out = band;
  for (auto& v : out.planes()) v = 0.5f * v + 0.5f;
  out.set_band_domain(false);
  return out;
}

PlanarImage display_unmap(const PlanarImage& shown) {
  PlanarImage out = shown;
  for (auto& v : out.planes()) v = 2.0f * v - 1.0f;
  out.set_band_domain(true);
  return out;
}

PlanarImage quantize8(const PlanarImage& img) {
  PlanarImage out = clamp01(img);
  for (auto& v : out.planes()) v = std::round(v * 255.0f) / 255.0f;
  return out;
}

PlanarImage load_image(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw io_error("cannot read image " + path.string() + ": no such file");
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw format_error("cannot read image " + path.string() + ": " + image.message);
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw format_error("unsupported bit depth (16-bit) in " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const int channels = color ? 3 : 1;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw format_error("cannot decode image " + path.string() + ": " + msg);
  }
  PlanarImage out(channels, h, w);
  const std::size_t n = out.plane_size();
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < channels; ++c)
      out.planes()[c * n + i] = static_cast<float>(buffer[i * channels + c]) / 255.0f;
  return out;
}

void save_image(const PlanarImage& img, const std::filesystem::path& path) {
  if (img.empty()) throw invalid_argument("cannot save an empty image to " + path.string());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = img.channels();
  const std::size_t n = img.plane_size();
  std::vector<png_byte> buffer(n * channels);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < channels; ++c) {
      const float v = std::clamp(img.planes()[c * n + i], 0.0f, 1.0f);
      buffer[i * channels + c] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
    throw io_error("cannot write image " + path.string() + ": " + image.message);
}

template <class T>
Tensor<T> to_tensor(const PlanarImage& img) {
  std::vector<T> data(img.planes().begin(), img.planes().end());
  return Tensor<T>({static_cast<std::size_t>(img.channels()),
                    static_cast<std::size_t>(img.height()),
                    static_cast<std::size_t>(img.width())},
                   std::move(data));
}

template Tensor<float> to_tensor<float>(const PlanarImage&);
template Tensor<double> to_tensor<double>(const PlanarImage&);

PlanarImage from_tensor(const Tensor<float>& t, bool band_domain) {
  if (t.rank() != 3) throw shape_error("image tensor must be [C,H,W], got " + shape_string(t.shape()));
  return PlanarImage(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)),
                     static_cast<int>(t.dim(2)),
                     std::vector<float>(t.data().begin(), t.data().end()), band_domain);
}

}  // namespace bandtint
