#include "lkcfu/metrics.hpp"

#include <cmath>
#include <string>

#include "lkcfu/error.hpp"
#include "lkcfu/losses.hpp"
#include "lkcfu/pipeline.hpp"

namespace lkcf {
namespace {

void check_gray(const Image& img, const char* where) {
  if (img.empty()) throw InvalidArgument(std::string(where) + ": empty image");
  if (img.channels != 1) throw ContractViolation(std::string(where) + ": expected a single-channel image");
}

void check_min_dims(const Image& img, const char* where) {
  check_gray(img, where);
  if (img.height < 2 || img.width < 2) throw InvalidArgument(std::string(where) + ": needs H,W >= 2");
}

void check_same(const Image& a, const Image& b, const char* where) {
  check_gray(a, where);
  check_gray(b, where);
  if (a.height != b.height || a.width != b.width) throw ContractViolation(std::string(where) + ": shape mismatch");
}

constexpr double kVarianceFloor = 1e-10;

double pearson(const std::vector<double>& x, const Image& y, const char* what) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y.data[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y.data[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx / n < kVarianceFloor || syy / n < kVarianceFloor)
    throw DegenerateMetric(std::string("metric_scd: zero-variance input to correlation ") + what);
  return sxy / std::sqrt(sxx * syy);
}

Image pool2(const Image& img) {
  Image out(img.height / 2, img.width / 2);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x)
      out.at(y, x) = 0.25 * (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) + img.at(2 * y + 1, 2 * x) +
                             img.at(2 * y + 1, 2 * x + 1));
  return out;
}

struct VifSums {
  double num = 0;
  double den = 0;
};

VifSums vif_scale(const Image& ref, const Image& dist) {
  VifSums s;
  for (int64_t by = 0; by + 1 < ref.height; by += 2)
    for (int64_t bx = 0; bx + 1 < ref.width; bx += 2) {
      double mr = 0, md = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          mr += ref.at(by + dy, bx + dx);
          md += dist.at(by + dy, bx + dx);
        }
      mr /= 4;
      md /= 4;
      double vr = 0, vd = 0, cov = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const double r = ref.at(by + dy, bx + dx) - mr, d = dist.at(by + dy, bx + dx) - md;
          vr += r * r;
          vd += d * d;
          cov += r * d;
        }
      vr /= 4;
      vd /= 4;
      cov /= 4;

      double g = 0, sv = vd;
      if (vr >= kVarianceFloor) {
        g = cov / vr;
        sv = vd - g * cov;
      }
      if (vd < kVarianceFloor) {
        g = 0;
        sv = 0;
      }
      if (g < 0) {
        g = 0;
        sv = vd;
      }
      sv = std::max(sv, kVarianceFloor);
      s.num += std::log2(1.0 + g * g * vr / (sv + kViffNoiseVariance));
      s.den += std::log2(1.0 + vr / kViffNoiseVariance);
    }
  return s;
}

Image luminance_0_255(const Image& img) {
  if (img.channels == 3) return scaled(to_luminance(img).y, 255.0);
  if (img.channels == 1) return scaled(img, 255.0);
  throw ContractViolation("evaluate_pair: images must have 1 or 3 channels");
}

}  // namespace

double metric_sd(const Image& f) {
  check_gray(f, "metric_sd");
  double mean = 0;
  for (double v : f.data) mean += v;
  mean /= static_cast<double>(f.size());
  double var = 0;
  for (double v : f.data) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(f.size()));
}

double metric_ag(const Image& f) {
  check_min_dims(f, "metric_ag");
  double sum = 0;
  for (int64_t y = 0; y + 1 < f.height; ++y)
    for (int64_t x = 0; x + 1 < f.width; ++x) {
      const double dx = f.at(y, x + 1) - f.at(y, x);
      const double dy = f.at(y + 1, x) - f.at(y, x);
      sum += std::sqrt((dx * dx + dy * dy) / 2.0);
    }
  return sum / static_cast<double>((f.height - 1) * (f.width - 1));
}

double metric_sf(const Image& f) {
  check_min_dims(f, "metric_sf");
  double rf = 0, cf = 0;
  for (int64_t y = 0; y < f.height; ++y)
    for (int64_t x = 0; x + 1 < f.width; ++x) {
      const double d = f.at(y, x + 1) - f.at(y, x);
      rf += d * d;
    }
  for (int64_t y = 0; y + 1 < f.height; ++y)
    for (int64_t x = 0; x < f.width; ++x) {
      const double d = f.at(y + 1, x) - f.at(y, x);
      cf += d * d;
    }
  rf /= static_cast<double>(f.height * (f.width - 1));
  cf /= static_cast<double>((f.height - 1) * f.width);
  return std::sqrt(rf + cf);
}

double metric_scd(const Image& f, const Image& a, const Image& b) {
  check_same(f, a, "metric_scd");
  check_same(f, b, "metric_scd");
  std::vector<double> f_minus_b(f.size()), f_minus_a(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f_minus_b[i] = f.data[i] - b.data[i];
    f_minus_a[i] = f.data[i] - a.data[i];
  }
  return pearson(f_minus_b, a, "r(F-B, A)") + pearson(f_minus_a, b, "r(F-A, B)");
}

double metric_viff(const Image& f, const Image& a, const Image& b) {
  check_same(f, a, "metric_viff");
  check_same(f, b, "metric_viff");
  if (f.height < kViffMinSize || f.width < kViffMinSize)
    throw InvalidArgument("metric_viff: images must be at least 32x32 for the 4-scale pyramid");
  VifSums total;
  for (const Image* src : {&a, &b}) {
    Image ref = *src, dist = f;
    for (int k = 0; k < kViffScales; ++k) {
      if (k > 0) {
        ref = pool2(ref);
        dist = pool2(dist);
      }
      const auto s = vif_scale(ref, dist);
      total.num += s.num;
      total.den += s.den;
    }
  }
  if (total.den <= 0) throw DegenerateMetric("metric_viff: sources carry no information (flat images)");
  return total.num / total.den;
}

double metric_ssim(const Image& f, const Image& a, const Image& b) {
  check_same(f, a, "metric_ssim");
  check_same(f, b, "metric_ssim");
  auto t = [](const Image& img) { return torch::tensor(img.data, torch::kFloat64).view({1, 1, img.height, img.width}); };
  SsimOptions opt;
  opt.data_range = 255.0;
  const auto tf = t(f);
  return 0.5 * (ssim_index(t(a), tf, opt).item<double>() + ssim_index(t(b), tf, opt).item<double>());
}

MetricRow evaluate_pair(const Image& fused, const Image& src_a, const Image& src_b, std::string image_id) {
  const auto f = luminance_0_255(fused);
  const auto a = luminance_0_255(src_a);
  const auto b = luminance_0_255(src_b);
  check_same(f, a, "evaluate_pair");
  check_same(f, b, "evaluate_pair");
  MetricRow row;
  row.image_id = std::move(image_id);
  auto guarded = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const DegenerateMetric&) {
      return std::nullopt;
    }
  };
  row.values[0] = metric_sd(f);
  row.values[1] = metric_ag(f);
  row.values[2] = metric_sf(f);
  row.values[3] = guarded([&] { return metric_scd(f, a, b); });
  row.values[4] = guarded([&] { return metric_viff(f, a, b); });
  row.values[5] = metric_ssim(f, a, b);
  return row;
}

}  // namespace lkcf
