#include "testing.hpp"

#include <json.hpp>

#include <cmath>
#include <random>

#include "lkcfu/error.hpp"
#include "lkcfu/metrics.hpp"
#include "test_util.hpp"

using namespace lkcf;
using oracle::Grid;
using testutil::to_grid;
using testutil::to_image;

namespace {

Image random_image(int h, int w, std::mt19937_64& rng) { return to_image(oracle::random_grid(h, w, rng, 0, 255)); }

Image box_blur(const Image& img, int r) {
  Image out(img.height, img.width);
  for (int64_t y = 0; y < img.height; ++y)
    for (int64_t x = 0; x < img.width; ++x) {
      double s = 0;
      int n = 0;
      for (int64_t dy = -r; dy <= r; ++dy)
        for (int64_t dx = -r; dx <= r; ++dx) {
          const int64_t yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= img.height || xx >= img.width) continue;
          s += img.at(yy, xx);
          ++n;
        }
      out.at(y, x) = s / n;
    }
  return out;
}

Image negated(Image img) {
  for (auto& v : img.data) v = -v;
  return img;
}

}  // namespace

TEST_CASE("SD") {
  CHECK(metric_sd(Image(8, 8, 1, 77.0)) == 0.0);
  Image two(4, 4);
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 2; ++x) two.at(y, x) = 255.0;
  CHECK(metric_sd(two) == 127.5);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto img = random_image(16, 16, rng);
    CHECK(std::abs(metric_sd(img) - oracle::sd(to_grid(img))) < 1e-9);
    CHECK(metric_sd(scaled(img, 0.5)) == doctest::Approx(0.5 * metric_sd(img)).epsilon(1e-12));
  }
}

TEST_CASE("AG") {
  CHECK(metric_ag(Image(8, 8, 1, 3.0)) == 0.0);
  for (double s : {1.0, 4.0, 17.0}) {
    Image ramp(6, 9);
    for (int64_t y = 0; y < 6; ++y)
      for (int64_t x = 0; x < 9; ++x) ramp.at(y, x) = s * x;
    CHECK(metric_ag(ramp) == doctest::Approx(s / std::sqrt(2.0)).epsilon(1e-12));
  }
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto img = random_image(8, 8, rng);
    CHECK(std::abs(metric_ag(img) - oracle::ag(to_grid(img))) < 1e-9);
    CHECK(metric_ag(transposed(img)) == doctest::Approx(metric_ag(img)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(metric_ag(Image(1, 8)), InvalidArgument);
}

TEST_CASE("SF") {
  CHECK(metric_sf(Image(8, 8, 1, 9.0)) == 0.0);
  Image stripes(8, 8);
  for (int64_t y = 0; y < 8; ++y)
    for (int64_t x = 1; x < 8; x += 2) stripes.at(y, x) = 255.0;
  CHECK(metric_sf(stripes) == doctest::Approx(255.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto img = random_image(8, 11, rng);
    CHECK(std::abs(metric_sf(img) - oracle::sf(to_grid(img))) < 1e-9);
    CHECK(metric_sf(transposed(img)) == doctest::Approx(metric_sf(img)).epsilon(1e-12));
  }
}

TEST_CASE("SCD") {
  std::mt19937_64 rng(4);
  const auto a = random_image(16, 16, rng), b = random_image(16, 16, rng);
  Image sum = a;
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += b.data[i];
  CHECK(metric_scd(sum, a, b) == doctest::Approx(2.0).epsilon(1e-12));
  // F = -(A+B) only reaches -1/sqrt(5) per term for independent A, B; -1 needs A = B.
  CHECK(metric_scd(negated(a), a, a) == doctest::Approx(-2.0).epsilon(1e-12));

  for (int i = 0; i < 10; ++i) {
    const auto f = random_image(16, 16, rng), x = random_image(16, 16, rng), y = random_image(16, 16, rng);
    CHECK(std::abs(metric_scd(f, x, y) - oracle::scd(to_grid(f), to_grid(x), to_grid(y))) < 1e-9);
  }
  CHECK_THROWS_AS(metric_scd(a, a, a), DegenerateMetric);
  CHECK_THROWS_AS(metric_scd(a, Image(16, 16, 1, 5.0), b), DegenerateMetric);
}

TEST_CASE("VIFF") {
  std::mt19937_64 rng(5);
  const auto a = random_image(64, 64, rng);
  CHECK(metric_viff(a, a, a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(metric_viff(box_blur(a, 4), a, a) < 1.0);

  for (int i = 0; i < 3; ++i) {
    const auto f = random_image(64, 64, rng), x = random_image(64, 64, rng), y = random_image(64, 64, rng);
    CHECK(std::abs(metric_viff(f, x, y) - oracle::viff(to_grid(f), to_grid(x), to_grid(y))) < 1e-6);
  }
  CHECK_THROWS_AS(metric_viff(Image(16, 16), Image(16, 16), Image(16, 16)), InvalidArgument);
  const Image flat(64, 64, 1, 10.0);
  CHECK_THROWS_AS(metric_viff(a, flat, flat), DegenerateMetric);
}

TEST_CASE("SSIM metric uses the 0-255 range") {
  std::mt19937_64 rng(6);
  const auto a = random_image(32, 32, rng), b = random_image(32, 32, rng), f = random_image(32, 32, rng);
  const double expect = 0.5 * (oracle::ssim(to_grid(a), to_grid(f), 255) + oracle::ssim(to_grid(b), to_grid(f), 255));
  CHECK(std::abs(metric_ssim(f, a, b) - expect) < 1e-9);
  CHECK(metric_ssim(a, a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate_pair identity column") {
  std::mt19937_64 rng(7);
  const auto x = to_image(oracle::random_grid(48, 48, rng));
  const auto row = evaluate_pair(x, x, x, "id");
  CHECK(row.image_id == "id");
  CHECK(*row.values[5] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(row.values[3].has_value());
  CHECK(*row.values[4] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(*row.values[0] == doctest::Approx(oracle::sd(to_grid(scaled(x, 255.0)))).epsilon(1e-12));
}

TEST_CASE("report aggregate, CSV and JSON") {
  std::mt19937_64 rng(8);
  MetricReport report;
  report.dataset = "synthetic";
  report.config_fingerprint = "abc";
  const auto a = to_image(oracle::random_grid(40, 40, rng));
  const auto b = to_image(oracle::random_grid(40, 40, rng));
  report.rows.push_back(evaluate_pair(to_image(oracle::random_grid(40, 40, rng)), a, b, "p0"));
  const auto one = report.aggregate();
  for (std::size_t c = 0; c < 6; ++c) CHECK(*one[c] == *report.rows[0].values[c]);

  report.rows.push_back(evaluate_pair(to_image(oracle::random_grid(40, 40, rng)), a, b, "p1"));
  report.rows.push_back(evaluate_pair(to_image(oracle::random_grid(40, 40, rng)), a, b, "p2"));
  const auto mean = report.aggregate();
  for (std::size_t c = 0; c < 6; ++c) {
    double s = 0;
    for (const auto& r : report.rows) s += *r.values[c];
    CHECK(std::abs(*mean[c] - s / 3) < 1e-12);
  }
  report.validate();

  report.rows.push_back(evaluate_pair(a, a, a, "flat"));
  const auto csv = to_csv(report, {false});
  CHECK(csv.rfind("# dataset=synthetic\n# config_fingerprint=abc\n# intensity_scale=0-255\nimage,SD,AG,SF,SCD,VIFF,SSIM\n", 0) == 0);
  CHECK(csv.find("flat,") != std::string::npos);
  CHECK(csv.find(",NA,") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(csv.find("generated") == std::string::npos);
  CHECK(to_csv(report, {true}).find("# generated=") != std::string::npos);

  const auto j = nlohmann::json::parse(to_json(report, {false}));
  CHECK(j["rows"].size() == 4);
  CHECK(j["rows"][3]["SCD"].is_null());
  CHECK(j["meta"]["config_fingerprint"] == "abc");
  CHECK(j["mean"]["SD"].get<double>() == doctest::Approx(*report.aggregate()[0]).epsilon(1e-12));
}

TEST_CASE("report validation catches non-finite values") {
  MetricReport report;
  MetricRow row;
  row.values = {1.0, 1.0, 1.0, 0.5, 0.5, std::nan("")};
  report.rows.push_back(row);
  CHECK_THROWS_AS(report.validate(), ContractViolation);
}
