#include "lkcfu/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>

#include "lkcfu/error.hpp"

namespace lkcf {

Image scaled(Image img, double factor) {
  for (auto& v : img.data) v *= factor;
  return img;
}

Image transposed(const Image& img) {
  Image out(img.width, img.height, img.channels);
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x)
      for (int64_t c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(y, x, c);
  return out;
}

bool has_image_extension(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".bmp" || ext == ".jpg" || ext == ".jpeg";
}

Image read_image(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing image '" + path + "'");
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot decode image '" + path + "'");
  if (m.depth() != CV_8U) throw IoError("'" + path + "': only 8-bit images are supported");
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
  Image img(m.rows, m.cols, m.channels());
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols * m.channels(); ++x)
      img.data[static_cast<std::size_t>(y * m.cols * m.channels() + x)] = row[x] / 255.0;
  }
  // Colour files whose channels are all equal are grayscale in disguise.
  if (img.channels == 3) {
    bool gray = true;
    for (std::size_t i = 0; gray && i < img.size(); i += 3)
      gray = img.data[i] == img.data[i + 1] && img.data[i] == img.data[i + 2];
    if (gray) {
      Image g(img.height, img.width, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = img.data[3 * i];
      return g;
    }
  }
  return img;
}

void write_png(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) throw InvalidArgument("write_png: need 1 or 3 channels");
  cv::Mat m(static_cast<int>(img.height), static_cast<int>(img.width), img.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (int64_t y = 0; y < img.height; ++y) {
    auto* row = m.ptr<std::uint8_t>(static_cast<int>(y));
    for (int64_t x = 0; x < img.width * img.channels; ++x) {
      const double v = std::clamp(img.data[static_cast<std::size_t>(y * img.width * img.channels + x)], 0.0, 1.0);
      row[x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  if (img.channels == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path, m)) throw IoError("cannot write '" + path + "'");
}

}  // namespace lkcf
