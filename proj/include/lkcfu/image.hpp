#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lkcf {

/// Row-major HWC raster of doubles. Decoded 8-bit images live in [0,1];
/// metric inputs are rescaled to [0,255].
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int64_t h, int64_t w, int64_t c = 1, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h * w * c), fill) {}

  bool empty() const { return data.empty(); }
  std::size_t size() const { return data.size(); }
  double& at(int64_t y, int64_t x, int64_t c = 0) {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  double at(int64_t y, int64_t x, int64_t c = 0) const {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
};

Image scaled(Image img, double factor);
Image transposed(const Image& img);

/// Decodes PNG/BMP/JPEG to [0,1]; grayscale files yield 1 channel, colour files RGB.
Image read_image(const std::string& path);
/// Writes 1- or 3-channel [0,1] data as 8-bit PNG (clamped, rounded).
void write_png(const Image& img, const std::string& path);

bool has_image_extension(const std::string& path);

}  // namespace lkcf
