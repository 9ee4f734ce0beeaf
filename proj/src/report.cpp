#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "lkcfu/error.hpp"
#include "lkcfu/metrics.hpp"

namespace lkcf {
namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json values_json(const std::array<std::optional<double>, 6>& values) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < values.size(); ++i)
    j[kMetricNames[i]] = values[i] ? nlohmann::ordered_json(*values[i]) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace

std::array<std::optional<double>, 6> MetricReport::aggregate() const {
  std::array<std::optional<double>, 6> out;
  for (std::size_t c = 0; c < out.size(); ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : rows)
      if (r.values[c]) {
        sum += *r.values[c];
        ++n;
      }
    if (n) out[c] = sum / static_cast<double>(n);
  }
  return out;
}

void MetricReport::validate() const {
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.values.size(); ++c) {
      if (!r.values[c]) continue;
      const double v = *r.values[c];
      const std::string where = "report row '" + r.image_id + "' " + kMetricNames[c];
      if (!std::isfinite(v)) throw ContractViolation(where + " is not finite");
      if (c < 3 && v < 0) throw ContractViolation(where + " is negative");
      if (c == 3 && std::abs(v) > 2 + 1e-9) throw ContractViolation(where + " outside [-2,2]");
      if (c == 5 && std::abs(v) > 1 + 1e-9) throw ContractViolation(where + " outside [-1,1]");
    }
}

std::string to_csv(const MetricReport& r, const ReportWriteOptions& opt) {
  std::string out;
  out += "# dataset=" + r.dataset + "\n";
  out += "# config_fingerprint=" + r.config_fingerprint + "\n";
  out += "# intensity_scale=" + r.intensity_scale + "\n";
  if (opt.include_meta) out += "# generated=" + utc_timestamp() + "\n";
  out += "image";
  for (const char* n : kMetricNames) out += std::string(",") + n;
  out += "\n";
  auto line = [&](const std::string& id, const std::array<std::optional<double>, 6>& v) {
    out += id;
    for (const auto& x : v) out += "," + fmt(x);
    out += "\n";
  };
  for (const auto& row : r.rows) line(row.image_id, row.values);
  line("mean", r.aggregate());
  return out;
}

std::string to_json(const MetricReport& r, const ReportWriteOptions& opt) {
  nlohmann::ordered_json j;
  j["meta"] = {{"dataset", r.dataset},
               {"config_fingerprint", r.config_fingerprint},
               {"intensity_scale", r.intensity_scale}};
  if (opt.include_meta) j["meta"]["generated"] = utc_timestamp();
  j["columns"] = kMetricNames;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    auto o = values_json(row.values);
    o["image"] = row.image_id;
    j["rows"].push_back(o);
  }
  j["mean"] = values_json(r.aggregate());
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("write failed: '" + path + "'");
}

}  // namespace lkcf
