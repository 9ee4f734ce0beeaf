#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lkcfu/image.hpp"

namespace lkcf {

// All metrics take single-channel images on the 0-255 intensity scale.

/// Population standard deviation of the intensities.
double metric_sd(const Image& f);

/// Mean over the (H-1)x(W-1) interior of sqrt((dx^2 + dy^2) / 2), forward differences.
double metric_ag(const Image& f);

/// sqrt(RF^2 + CF^2); RF (CF) is the RMS of horizontal (vertical) neighbour differences.
double metric_sf(const Image& f);

/// r(F - B, A) + r(F - A, B) with population Pearson correlation.
/// Throws DegenerateMetric when any correlated image has zero variance.
double metric_scd(const Image& f, const Image& a, const Image& b);

/// Additive noise variance of the VIF channel model on the 0-255 scale.
inline constexpr double kViffNoiseVariance = 2.0;
inline constexpr int kViffScales = 4;
inline constexpr int kViffMinSize = 32;

/// Multi-scale visual information fidelity for fusion.
///
/// Each source S and the fused image F are reduced by a 2x2 mean-pooling pyramid
/// (4 scales). At every scale the image is tiled into non-overlapping 2x2 blocks; per
/// block a scalar gain g = cov(S,F)/var(S) and distortion variance
/// v = var(F) - g cov(S,F) give
///   num = log2(1 + g^2 var(S) / (v + sn2)),  den = log2(1 + var(S) / sn2).
/// VIFF = sum(num) / sum(den) over both sources and all scales, i.e. each source
/// and scale is weighted by its own visual information. Throws DegenerateMetric
/// when the sources carry no information (all blocks flat).
double metric_viff(const Image& f, const Image& a, const Image& b);

/// SSIM entry of the report: mean of SSIM(A,F) and SSIM(B,F) with dynamic range 255.
double metric_ssim(const Image& f, const Image& a, const Image& b);

inline constexpr std::array<const char*, 6> kMetricNames{"SD", "AG", "SF", "SCD", "VIFF", "SSIM"};

/// One image's six metrics in column order; a missing entry marks a degenerate metric.
struct MetricRow {
  std::string image_id;
  std::array<std::optional<double>, 6> values;
};

/// Computes all six metrics on luminance. Inputs are [0,1] images (colour allowed)
/// and are rescaled to 0-255 internally.
MetricRow evaluate_pair(const Image& fused, const Image& src_a, const Image& src_b, std::string image_id = {});

struct MetricReport {
  std::string dataset;
  std::string config_fingerprint;
  std::string intensity_scale = "0-255";
  std::vector<MetricRow> rows;

  /// Arithmetic mean of the present values in each column.
  std::array<std::optional<double>, 6> aggregate() const;
  void validate() const;
};

struct ReportWriteOptions {
  bool include_meta = true;  // timestamp line; off for byte-reproducible output
};

std::string to_csv(const MetricReport& r, const ReportWriteOptions& opt = {});
std::string to_json(const MetricReport& r, const ReportWriteOptions& opt = {});
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace lkcf
