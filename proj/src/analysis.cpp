#include "lkcfu/analysis.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "lkcfu/error.hpp"
#include "lkcfu/metrics.hpp"

namespace lkcf {

HistogramStats histogram_stats(const Image& img, int bins) {
  if (img.empty()) throw InvalidArgument("histogram_stats: empty image");
  if (img.channels != 1) throw ContractViolation("histogram_stats: expected a single-channel image");
  if (bins < 2) throw InvalidArgument("histogram_stats: bins must be >= 2");
  HistogramStats h;
  h.histogram.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : img.data) {
    const double s = std::clamp(v, 0.0, 1.0) * 255.0;
    auto b = static_cast<int>(s * bins / 256.0);
    h.histogram[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
  }
  for (auto& c : h.histogram) c /= static_cast<double>(img.size());
  h.sd = metric_sd(scaled(img, 255.0));
  return h;
}

std::string histogram_csv(const HistogramStats& h) {
  std::string out = "# sd=" + std::to_string(h.sd) + "\nbin,lower,upper,fraction\n";
  const double width = 256.0 / static_cast<double>(h.histogram.size());
  char buf[128];
  for (std::size_t i = 0; i < h.histogram.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.4f,%.4f,%.10f\n", i, i * width, (i + 1) * width, h.histogram[i]);
    out += buf;
  }
  return out;
}

void write_histogram_plot(const HistogramStats& h, const std::string& path) {
  constexpr int kW = 512, kH = 256, kMargin = 16;
  cv::Mat canvas(kH, kW, CV_8UC3, cv::Scalar(255, 255, 255));
  const double peak = *std::max_element(h.histogram.begin(), h.histogram.end());
  const double bw = static_cast<double>(kW - 2 * kMargin) / static_cast<double>(h.histogram.size());
  for (std::size_t i = 0; i < h.histogram.size(); ++i) {
    const int height = peak > 0 ? static_cast<int>((kH - 2 * kMargin) * h.histogram[i] / peak) : 0;
    const int x0 = kMargin + static_cast<int>(i * bw);
    const int x1 = std::max(x0 + 1, kMargin + static_cast<int>((i + 1) * bw) - 1);
    cv::rectangle(canvas, cv::Point(x0, kH - kMargin - height), cv::Point(x1, kH - kMargin),
                  cv::Scalar(180, 110, 40), cv::FILLED);
  }
  char label[64];
  std::snprintf(label, sizeof label, "SD=%.3f", h.sd);
  cv::putText(canvas, label, cv::Point(kW - 150, 30), cv::FONT_HERSHEY_SIMPLEX, 0.6, cv::Scalar(0, 0, 0), 1);
  if (!cv::imwrite(path, canvas)) throw IoError("cannot write '" + path + "'");
}

ConsistencyMap local_consistency(const torch::Tensor& features, int64_t patch, std::string layer) {
  if (patch < 1) throw InvalidArgument("local_consistency: patch must be positive");
  auto fm = features.detach().to(torch::kFloat64);
  if (fm.dim() == 4) {
    if (fm.size(0) != 1) throw ContractViolation("local_consistency: expected a single feature map");
    fm = fm[0];
  }
  if (fm.dim() != 3) throw ContractViolation("local_consistency: expected (C,H,W)");
  const auto h = fm.size(1), w = fm.size(2);

  // Unit channel vectors, (H,W,C). sum_{i<j} u_i.u_j = (|sum u|^2 - sum |u|^2) / 2.
  const auto norms = (fm.pow(2).sum(0) + kCosineEps).sqrt();
  const auto unit = (fm / norms).permute({1, 2, 0}).contiguous();

  ConsistencyMap map;
  map.patch = patch;
  map.rows = (h + patch - 1) / patch;
  map.cols = (w + patch - 1) / patch;
  map.layer = std::move(layer);
  using torch::indexing::Slice;
  for (int64_t r = 0; r < map.rows; ++r)
    for (int64_t c = 0; c < map.cols; ++c) {
      const auto block = unit.index({Slice(r * patch, std::min(h, (r + 1) * patch)),
                                     Slice(c * patch, std::min(w, (c + 1) * patch))})
                             .reshape({-1, fm.size(0)});
      const auto n = block.size(0);
      if (n < 2) {
        map.scores.push_back(1.0);
        continue;
      }
      const double total = block.sum(0).pow(2).sum().item<double>();
      const double self = block.pow(2).sum().item<double>();
      const double pairs = static_cast<double>(n * (n - 1)) / 2.0;
      map.scores.push_back(std::clamp((total - self) / 2.0 / pairs, -1.0, 1.0));
    }
  return map;
}

std::string consistency_text(const ConsistencyMap& map) {
  std::string out = "# layer=" + map.layer + " patch=" + std::to_string(map.patch) +
                    " rows=" + std::to_string(map.rows) + " cols=" + std::to_string(map.cols) + "\n";
  char buf[32];
  for (int64_t r = 0; r < map.rows; ++r) {
    for (int64_t c = 0; c < map.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%s%.6f", c ? " " : "", map.at(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

TimingReport bench_inference(LkcFuNet& model, int64_t height, int64_t width, int warmup, int reps, uint64_t seed) {
  if (reps < 1) throw InvalidArgument("bench_inference: reps must be >= 1");
  if (warmup < 0) throw InvalidArgument("bench_inference: warmup must be >= 0");
  torch::NoGradGuard no_grad;
  model->eval();
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto input = torch::rand({1, 2, height, width}, gen);

  TimingReport r;
  r.height = height;
  r.width = width;
  r.warmup = warmup;
  for (int i = 0; i < warmup; ++i) model->forward(input);
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = model->forward(input);
    (void)out.data_ptr<float>();
    r.samples_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  double sum = 0;
  for (double s : r.samples_ms) sum += s;
  r.mean_ms = sum / reps;
  double var = 0;
  for (double s : r.samples_ms) var += (s - r.mean_ms) * (s - r.mean_ms);
  r.std_ms = std::sqrt(var / reps);
  return r;
}

std::string timing_json(const std::vector<TimingReport>& reports) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : reports)
    j.push_back({{"resolution", std::to_string(r.width) + "x" + std::to_string(r.height)},
                 {"height", r.height},
                 {"width", r.width},
                 {"warmup", r.warmup},
                 {"reps", r.samples_ms.size()},
                 {"mean_ms", r.mean_ms},
                 {"std_ms", r.std_ms},
                 {"samples_ms", r.samples_ms}});
  return j.dump(2) + "\n";
}

}  // namespace lkcf
