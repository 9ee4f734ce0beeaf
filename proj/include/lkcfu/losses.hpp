#pragma once

#include <torch/torch.h>

namespace lkcf {

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean local SSIM of two (B,1,H,W) images with a Gaussian window and
/// replicate padding, so every pixel contributes. Differentiable; returns a 0-dim tensor.
/// Symmetric in its arguments bit-for-bit.
torch::Tensor ssim_index(const torch::Tensor& x, const torch::Tensor& y, const SsimOptions& opt = {});

/// |Sobel_x| + |Sobel_y| with reflect padding; same shape as the input.
torch::Tensor sobel_magnitude(const torch::Tensor& img);

/// 1 - (SSIM(I_A, I_F) + SSIM(I_B^Y, I_F)) / 2.
torch::Tensor loss_ssim(const torch::Tensor& src_a, const torch::Tensor& src_b_y, const torch::Tensor& fused);
/// Mean absolute deviation of I_F from max(I_A, I_B^Y).
torch::Tensor loss_int(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y);
/// Mean absolute deviation of |grad I_F| from max(|grad I_A|, |grad I_B^Y|).
torch::Tensor loss_grad(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y);

struct LossBreakdown {
  double l_ssim = 0;
  double l_int = 0;
  double l_grad = 0;
  double l_total = 0;  // always l_ssim + l_int + l_grad
};

struct LossTerms {
  torch::Tensor ssim, intensity, gradient, total;
  LossBreakdown breakdown() const;
};

/// Unit-weighted sum of the three terms; `total` is the tensor to differentiate.
LossTerms loss_total(const torch::Tensor& fused, const torch::Tensor& src_a, const torch::Tensor& src_b_y);

}  // namespace lkcf
