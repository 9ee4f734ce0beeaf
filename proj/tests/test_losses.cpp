#include "testing.hpp"

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "lkcfu/error.hpp"
#include "lkcfu/losses.hpp"

using namespace lkcf;
using oracle::Grid;
using testutil::from_tensor64;
using testutil::to_tensor64;

namespace {

torch::Tensor constant(double v, int n = 16) { return torch::full({1, 1, n, n}, v, torch::kFloat64); }

Grid half_black_white(int n) {
  Grid g(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = n / 2; x < n; ++x) g(y, x) = 1.0;
  return g;
}

}  // namespace

TEST_CASE("ssim of an image with itself is 1") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const auto x = to_tensor64(oracle::random_grid(24, 24, rng));
    CHECK(ssim_index(x, x).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(ssim_index(constant(0.3), constant(0.3)).item<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim against the windowed oracle") {
  const auto x = half_black_white(32);
  Grid inv(32, 32);
  for (std::size_t i = 0; i < x.v.size(); ++i) inv.v[i] = 1.0 - x.v[i];
  const double got = ssim_index(to_tensor64(x), to_tensor64(inv)).item<double>();
  CHECK(got < 0.0);
  CHECK(std::abs(got - oracle::ssim(x, inv)) < 1e-9);

  std::mt19937_64 rng(8);
  for (int i = 0; i < 3; ++i) {
    const auto a = oracle::random_grid(16, 20, rng), b = oracle::random_grid(16, 20, rng);
    CHECK(std::abs(ssim_index(to_tensor64(a), to_tensor64(b)).item<double>() - oracle::ssim(a, b)) < 1e-9);
  }
}

TEST_CASE("ssim is symmetric bit for bit") {
  torch::manual_seed(2);
  for (auto dtype : {torch::kFloat32, torch::kFloat64}) {
    const auto x = torch::rand({2, 1, 40, 33}, dtype), y = torch::rand({2, 1, 40, 33}, dtype);
    CHECK(torch::equal(ssim_index(x, y), ssim_index(y, x)));
  }
}

TEST_CASE("ssim rejects mismatched shapes") {
  CHECK_THROWS_AS(ssim_index(torch::rand({1, 1, 8, 8}), torch::rand({1, 1, 8, 9})), ContractViolation);
  CHECK_THROWS_AS(ssim_index(torch::rand({1, 2, 8, 8}), torch::rand({1, 2, 8, 8})), ContractViolation);
}

TEST_CASE("ssim loss values") {
  torch::manual_seed(4);
  const auto x = torch::rand({1, 1, 32, 32}, torch::kFloat64);
  CHECK(loss_ssim(x, x, x).item<double>() == doctest::Approx(0.0).epsilon(1e-12));

  const auto noise = torch::rand({1, 1, 32, 32}, torch::kFloat64);
  const double expect = 0.5 * (1.0 - ssim_index(noise, x).item<double>());
  CHECK(loss_ssim(x, noise, x).item<double>() == doctest::Approx(expect).epsilon(1e-12));

  for (int i = 0; i < 20; ++i) {
    const auto a = torch::rand({1, 1, 16, 16}, torch::kFloat64), b = torch::rand({1, 1, 16, 16}, torch::kFloat64);
    const double v = loss_ssim(a, b, 1.0 - a).item<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }
}

TEST_CASE("intensity loss values") {
  CHECK(loss_int(constant(0.5), constant(0.2), constant(0.6)).item<double>() == doctest::Approx(0.1).epsilon(1e-12));

  std::mt19937_64 rng(11);
  const auto a = oracle::random_grid(8, 8, rng), b = oracle::random_grid(8, 8, rng), f = oracle::random_grid(8, 8, rng);
  const auto ta = to_tensor64(a), tb = to_tensor64(b);
  CHECK(loss_int(torch::maximum(ta, tb), ta, tb).item<double>() == 0.0);
  CHECK(std::abs(loss_int(to_tensor64(f), ta, tb).item<double>() - oracle::loss_int(f, a, b)) < 1e-9);
}

TEST_CASE("gradient loss values") {
  CHECK(loss_grad(constant(0.125), constant(0.75), constant(0.375)).item<double>() == 0.0);

  std::mt19937_64 rng(12);
  const auto a = oracle::random_grid(8, 8, rng), b = oracle::random_grid(8, 8, rng), f = oracle::random_grid(8, 8, rng);
  const auto ta = to_tensor64(a);
  // Halving A halves every Sobel response, so A dominates the max everywhere.
  CHECK(loss_grad(ta, ta, 0.5 * ta).item<double>() == 0.0);
  CHECK(std::abs(loss_grad(to_tensor64(f), ta, to_tensor64(b)).item<double>() - oracle::loss_grad(f, a, b)) < 1e-9);

  const auto s = from_tensor64(sobel_magnitude(to_tensor64(f)));
  const auto so = oracle::sobel(f);
  for (std::size_t i = 0; i < s.v.size(); ++i) CHECK(std::abs(s.v[i] - so.v[i]) < 1e-12);
}

TEST_CASE("total loss breakdown") {
  const auto c = constant(0.5);
  const auto zero = loss_total(c, c, c).breakdown();
  CHECK(zero.l_ssim == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(zero.l_int == 0.0);
  CHECK(zero.l_grad == 0.0);
  CHECK(zero.l_total == doctest::Approx(0.0).epsilon(1e-12));

  torch::manual_seed(9);
  const auto f = torch::rand({2, 1, 16, 16}), a = torch::rand({2, 1, 16, 16}), b = torch::rand({2, 1, 16, 16});
  const auto r = loss_total(f, a, b).breakdown();
  CHECK(r.l_total - (r.l_ssim + r.l_int + r.l_grad) == 0.0);
  CHECK(r.l_total > 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  const testutil::TensorLoss terms[] = {
      [](const torch::Tensor& f, const torch::Tensor& a, const torch::Tensor& b) { return loss_ssim(a, b, f); },
      [](const torch::Tensor& f, const torch::Tensor& a, const torch::Tensor& b) { return loss_int(f, a, b); },
      [](const torch::Tensor& f, const torch::Tensor& a, const torch::Tensor& b) { return loss_grad(f, a, b); },
      [](const torch::Tensor& f, const torch::Tensor& a, const torch::Tensor& b) { return loss_total(f, a, b).total; },
  };
  for (uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto a = oracle::random_grid(8, 8, rng), b = oracle::random_grid(8, 8, rng), f = oracle::random_grid(8, 8, rng);
    for (const auto& term : terms) {
      const auto r = testutil::gradcheck(term, f, a, b);
      CHECK(r.ok);
      CHECK(r.compared > 0);
    }
  }
}

TEST_CASE("gradcheck flags stencils that straddle a kink") {
  // F sits 0.5h above max(A, B) at one pixel: the central difference there is not a slope.
  std::mt19937_64 rng(21);
  auto a = oracle::random_grid(8, 8, rng), b = oracle::random_grid(8, 8, rng), f = oracle::random_grid(8, 8, rng);
  f.v[10] = std::max(a.v[10], b.v[10]) + 0.5e-4;
  const auto r = testutil::gradcheck(
      [](const torch::Tensor& x, const torch::Tensor& p, const torch::Tensor& q) { return loss_int(x, p, q); }, f, a, b);
  CHECK(r.kinks == 1);
  CHECK(r.ok);
  CHECK(r.compared == 63);
}
