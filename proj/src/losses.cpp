#include "lkcfu/losses.hpp"

#include <cmath>
#include <string>

#include "lkcfu/error.hpp"

namespace lkcf {
namespace F = torch::nn::functional;
namespace {

void check_single_channel(const torch::Tensor& t, const char* where) {
  if (t.dim() != 4 || t.size(1) != 1)
    throw ContractViolation(std::string(where) + ": expected (B,1,H,W) tensors");
}

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* where) {
  check_single_channel(a, where);
  if (a.sizes() != b.sizes()) throw ContractViolation(std::string(where) + ": shape mismatch");
}

torch::Tensor gaussian_window(const SsimOptions& opt, const torch::TensorOptions& to) {
  const auto n = opt.window;
  auto g = torch::empty({n}, to.dtype(torch::kFloat64));
  auto acc = g.accessor<double, 1>();
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double d = i - (n - 1) / 2.0;
    acc[i] = std::exp(-d * d / (2 * opt.sigma * opt.sigma));
    sum += acc[i];
  }
  g /= sum;
  return torch::outer(g, g).view({1, 1, n, n}).to(to.dtype());
}

torch::Tensor blur(const torch::Tensor& x, const torch::Tensor& window) {
  const auto p = window.size(-1) / 2;
  return F::conv2d(F::pad(x, F::PadFuncOptions({p, p, p, p}).mode(torch::kReplicate)), window);
}

}  // namespace

torch::Tensor ssim_index(const torch::Tensor& x, const torch::Tensor& y, const SsimOptions& opt) {
  check_same_shape(x, y, "ssim_index");
  const auto w = gaussian_window(opt, x.options());
  const double c1 = std::pow(opt.k1 * opt.data_range, 2);
  const double c2 = std::pow(opt.k2 * opt.data_range, 2);
  const auto mu_x = blur(x, w);
  const auto mu_y = blur(y, w);
  const auto mu_xy = mu_x * mu_y;
  const auto var_x = blur(x * x, w) - mu_x * mu_x;
  const auto var_y = blur(y * y, w) - mu_y * mu_y;
  const auto cov = blur(x * y, w) - mu_xy;
  const auto num = (2 * mu_xy + c1) * (2 * cov + c2);
  const auto den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
  return (num / den).mean();
}

torch::Tensor sobel_magnitude(const torch::Tensor& img) {
  check_single_channel(img, "sobel_magnitude");
  const auto kx = torch::tensor({-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0}, img.options()).view({1, 1, 3, 3});
  const auto ky = kx.transpose(2, 3).contiguous();
  const auto padded = F::pad(img, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReflect));
  return F::conv2d(padded, kx).abs() + F::conv2d(padded, ky).abs();
}

torch::Tensor loss_ssim(const torch::Tensor& src_a, const torch::Tensor& src_b_y, const torch::Tensor& fused) {
  check_same_shape(src_a, fused, "loss_ssim");
  check_same_shape(src_b_y, fused, "loss_ssim");
  return 1.0 - (ssim_index(src_a, fused) + ssim_index(src_b_y, fused)) / 2.0;
}

torch::Tensor loss_int(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y) {
  check_same_shape(src_a, fused, "loss_int");
  check_same_shape(src_b_y, fused, "loss_int");
  return (fused - torch::maximum(src_a, src_b_y)).abs().mean();
}

torch::Tensor loss_grad(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y) {
  check_same_shape(src_a, fused, "loss_grad");
  check_same_shape(src_b_y, fused, "loss_grad");
  const auto target = torch::maximum(sobel_magnitude(src_a), sobel_magnitude(src_b_y));
  return (sobel_magnitude(fused) - target).abs().mean();
}

LossBreakdown LossTerms::breakdown() const {
  LossBreakdown b;
  b.l_ssim = ssim.item<double>();
  b.l_int = intensity.item<double>();
  b.l_grad = gradient.item<double>();
  b.l_total = b.l_ssim + b.l_int + b.l_grad;
  return b;
}

LossTerms loss_total(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y) {
  LossTerms t;
  t.ssim = loss_ssim(src_a, src_b_y, fused);
  t.intensity = loss_int(fused, src_a, src_b_y);
  t.gradient = loss_grad(fused, src_a, src_b_y);
  t.total = t.ssim + t.intensity + t.gradient;
  return t;
}

}  // namespace lkcf
