#include <algorithm>
#include <cmath>
#include <random>

#include "lkcfu/pipeline.hpp"

namespace lkcf {

std::vector<ImagePair> make_synthetic_pairs(int count, int64_t size, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ImagePair> pairs;
  for (int n = 0; n < count; ++n) {
    ImagePair p;
    p.id = "synthetic_" + std::to_string(n);
    p.modal_a = Image(size, size, 1, 0.1);
    p.modal_b = Image(size, size, 1, 0.2);

    // Modal A: a few Gaussian hot spots on a dim background.
    const int blobs = 3 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < blobs; ++k) {
      const double cy = u(rng) * size, cx = u(rng) * size;
      const double r = size * (0.06 + 0.1 * u(rng)), amp = 0.5 + 0.4 * u(rng);
      for (int64_t y = 0; y < size; ++y)
        for (int64_t x = 0; x < size; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          p.modal_a.at(y, x) += amp * std::exp(-d2 / (2 * r * r));
        }
    }

    // Modal B: axis-aligned rectangles plus a stripe band.
    const int rects = 2 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < rects; ++k) {
      const auto y0 = static_cast<int64_t>(u(rng) * size * 0.7), x0 = static_cast<int64_t>(u(rng) * size * 0.7);
      const auto h = static_cast<int64_t>(size * (0.1 + 0.25 * u(rng)));
      const auto w = static_cast<int64_t>(size * (0.1 + 0.25 * u(rng)));
      const double level = 0.3 + 0.6 * u(rng);
      for (int64_t y = y0; y < std::min(size, y0 + h); ++y)
        for (int64_t x = x0; x < std::min(size, x0 + w); ++x) p.modal_b.at(y, x) = level;
    }
    const double period = 4 + 6 * u(rng);
    const auto band0 = static_cast<int64_t>(u(rng) * size * 0.6), band1 = band0 + size / 4;
    for (int64_t y = band0; y < std::min(size, band1); ++y)
      for (int64_t x = 0; x < size; ++x)
        if (std::fmod(x, period) < period / 2) p.modal_b.at(y, x) = std::min(1.0, p.modal_b.at(y, x) + 0.3);

    for (auto* img : {&p.modal_a, &p.modal_b})
      for (auto& v : img->data) v = std::clamp(v, 0.0, 1.0);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace lkcf
