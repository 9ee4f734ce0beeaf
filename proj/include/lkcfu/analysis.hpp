#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "lkcfu/image.hpp"
#include "lkcfu/model.hpp"

namespace lkcf {

struct HistogramStats {
  std::vector<double> histogram;  // normalized, sums to 1
  double sd = 0;                  // on the 0-255 scale
};

/// Intensity histogram of a [0,1] grayscale image over `bins` equal-width bins of 0-255,
/// plus the image standard deviation on that scale.
HistogramStats histogram_stats(const Image& img, int bins);
std::string histogram_csv(const HistogramStats& h);
/// Bar-chart PNG of the histogram with the SD printed in the corner.
void write_histogram_plot(const HistogramStats& h, const std::string& path);

/// Per-patch redundancy of a feature map: the mean pairwise cosine similarity
/// between the channel vectors of the pixels in each patch.
struct ConsistencyMap {
  int64_t patch = 0;
  int64_t rows = 0;
  int64_t cols = 0;
  std::string layer;
  std::vector<double> scores;  // row-major rows x cols, each in [-1,1]

  double at(int64_t r, int64_t c) const { return scores[static_cast<std::size_t>(r * cols + c)]; }
};

inline constexpr double kCosineEps = 1e-12;
inline constexpr int64_t kDefaultConsistencyPatch = 16;

/// `features` is (C,H,W) or (1,C,H,W). Edge patches that do not fill p x p use only the
/// pixels inside the map. A single-pixel patch scores 1.
ConsistencyMap local_consistency(const torch::Tensor& features, int64_t patch, std::string layer = "init_block");

/// Text grid: a `# layer=... patch=... rows=... cols=...` header, then one line per grid row.
std::string consistency_text(const ConsistencyMap& map);

struct TimingReport {
  int64_t height = 0;
  int64_t width = 0;
  int warmup = 0;
  std::vector<double> samples_ms;
  double mean_ms = 0;
  double std_ms = 0;
};

/// Times model.forward on a fixed (1,2,H,W) input: `warmup` untimed calls, then `reps` timed
/// ones measured from the call to a materialized result.
TimingReport bench_inference(LkcFuNet& model, int64_t height, int64_t width, int warmup, int reps, uint64_t seed = 0);
std::string timing_json(const std::vector<TimingReport>& reports);

}  // namespace lkcf
