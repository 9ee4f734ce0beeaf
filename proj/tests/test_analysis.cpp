#include "testing.hpp"

#include <json.hpp>

#include <filesystem>
#include <random>

#include "lkcfu/analysis.hpp"
#include "lkcfu/error.hpp"
#include "oracles.hpp"

using namespace lkcf;

TEST_CASE("histogram of a constant image") {
  const auto h = histogram_stats(Image(10, 10, 1, 0.4), 64);
  int occupied = 0;
  for (double v : h.histogram) occupied += v > 0;
  CHECK(occupied == 1);
  CHECK(h.sd == 0.0);
}

TEST_CASE("histogram of a full ramp is flat") {
  Image ramp(4, 256);
  for (int64_t y = 0; y < 4; ++y)
    for (int64_t x = 0; x < 256; ++x) ramp.at(y, x) = x / 255.0;
  const auto h = histogram_stats(ramp, 256);
  for (double v : h.histogram) CHECK(v == doctest::Approx(1.0 / 256).epsilon(1e-12));
  const auto coarse = histogram_stats(ramp, 16);
  for (double v : coarse.histogram) CHECK(v == doctest::Approx(1.0 / 16).epsilon(1e-12));
}

TEST_CASE("histogram of a random image") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  Image img(31, 17);
  for (auto& v : img.data) v = u(rng);
  const auto h = histogram_stats(img, 32);
  double sum = 0;
  for (double v : h.histogram) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  std::vector<int> counts(32, 0);
  for (double v : img.data) ++counts[static_cast<std::size_t>(std::min(31, static_cast<int>(v * 255.0 / 8.0)))];
  for (std::size_t b = 0; b < 32; ++b) CHECK(h.histogram[b] == doctest::Approx(counts[b] / double(img.size())).epsilon(1e-12));

  const auto csv = histogram_csv(h);
  CHECK(csv.rfind("# sd=", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 34);

  const auto path = (std::filesystem::temp_directory_path() / "lkcf_hist.png").string();
  write_histogram_plot(h, path);
  CHECK(read_image(path).width == 512);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(histogram_stats(Image(2, 2, 3), 8), ContractViolation);
  CHECK_THROWS_AS(histogram_stats(Image(2, 2), 1), InvalidArgument);
}

TEST_CASE("consistency of constant and orthogonal patches") {
  auto fm = torch::rand({6, 8, 8}, torch::kFloat64);
  fm.index_put_({torch::indexing::Slice(), torch::indexing::Slice(0, 4), torch::indexing::Slice(0, 4)},
                torch::tensor({1.0, -2.0, 0.5, 3.0, 0.0, 1.0}, torch::kFloat64).view({6, 1, 1}));
  const auto map = local_consistency(fm, 4);
  CHECK(map.rows == 2);
  CHECK(map.cols == 2);
  CHECK(map.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  auto ortho = torch::zeros({4, 2, 2}, torch::kFloat64);
  for (int64_t k = 0; k < 4; ++k) ortho[k][k / 2][k % 2] = 1.0 + k;
  CHECK(std::abs(local_consistency(ortho, 2).at(0, 0)) < 1e-12);
}

TEST_CASE("consistency against the pairwise oracle") {
  torch::manual_seed(5);
  for (int64_t patch : {4, 5}) {
    const auto fm = torch::randn({1, 8, 16, 16}, torch::kFloat64);
    const auto map = local_consistency(fm, patch, "probe");
    CHECK(map.layer == "probe");
    const auto sample = fm[0];
    const auto a = sample.accessor<double, 3>();
    for (int64_t r = 0; r < map.rows; ++r)
      for (int64_t c = 0; c < map.cols; ++c) {
        std::vector<std::vector<double>> vecs;
        for (int64_t y = r * patch; y < std::min<int64_t>(16, (r + 1) * patch); ++y)
          for (int64_t x = c * patch; x < std::min<int64_t>(16, (c + 1) * patch); ++x) {
            std::vector<double> v(8);
            for (int64_t ch = 0; ch < 8; ++ch) v[static_cast<std::size_t>(ch)] = a[ch][y][x];
            vecs.push_back(v);
          }
        CHECK(std::abs(map.at(r, c) - oracle::mean_pairwise_cosine(vecs)) < 1e-9);
      }
  }
  const auto single = local_consistency(torch::randn({3, 5, 5}), 4);
  CHECK(single.at(1, 1) == 1.0);

  const auto text = consistency_text(local_consistency(torch::randn({3, 8, 8}), 4));
  CHECK(text.rfind("# layer=init_block patch=4 rows=2 cols=2\n", 0) == 0);
  CHECK_THROWS_AS(local_consistency(torch::randn({2, 3, 8, 8}), 4), ContractViolation);
  CHECK_THROWS_AS(local_consistency(torch::randn({3, 8, 8}), 0), InvalidArgument);
}

TEST_CASE("bench timing") {
  auto model = make_model(desk_scale(default_model_config()), 0);
  const auto one = bench_inference(model, 48, 64, 0, 1);
  REQUIRE(one.samples_ms.size() == 1);
  CHECK(one.mean_ms == one.samples_ms[0]);
  CHECK(one.std_ms == 0.0);

  const auto three = bench_inference(model, 48, 48, 1, 3);
  CHECK(three.samples_ms.size() == 3);
  const auto j = nlohmann::json::parse(timing_json({one, three}));
  CHECK(j[0]["resolution"] == "64x48");
  CHECK(j[1]["reps"] == 3);
  CHECK_THROWS_AS(bench_inference(model, 48, 48, 0, 0), InvalidArgument);
}
