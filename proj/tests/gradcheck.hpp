#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

namespace testutil {

using TensorLoss = std::function<torch::Tensor(const torch::Tensor& f, const torch::Tensor& a, const torch::Tensor& b)>;

struct GradcheckResult {
  double worst_rel = 0;  // max |analytic - fd| / max(|analytic|, |fd|) over compared pixels
  int compared = 0;
  int kinks = 0;         // pixels whose stencil straddles a non-differentiable point
  bool ok = true;
};

/// Compares autograd d(loss)/dF against central differences of the same loss
/// evaluated in float64.
///
/// The losses are piecewise smooth (|.| and max). When the stencil [x-h, x+h]
/// crosses a kink the central difference is not a derivative estimate. On a smooth
/// stencil the differences at h and h/2 agree to O(h^2); a kink anywhere inside
/// makes them disagree, so such pixels are counted instead of compared. Pixels
/// where both gradients are below `floor` are exact cancellations and are checked
/// absolutely.
inline GradcheckResult gradcheck(const TensorLoss& loss, const oracle::Grid& f, const oracle::Grid& a,
                                 const oracle::Grid& b, double rel_tol = 1e-3, double h = 1e-4,
                                 double floor = 1e-9) {
  const auto ta = to_tensor64(a), tb = to_tensor64(b);
  auto tf = to_tensor64(f).requires_grad_(true);
  loss(tf, ta, tb).backward();
  const auto analytic = from_tensor64(tf.grad());

  oracle::Grid at = f;
  auto central = [&](std::size_t i, double step) {
    torch::NoGradGuard ng;
    at.v[i] = f.v[i] + step;
    const double up = loss(to_tensor64(at), ta, tb).item<double>();
    at.v[i] = f.v[i] - step;
    const double down = loss(to_tensor64(at), ta, tb).item<double>();
    at.v[i] = f.v[i];
    return (up - down) / (2 * step);
  };

  GradcheckResult r;
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    const double y = central(i, h), half = central(i, h / 2);
    if (std::abs(y - half) > std::max(floor, rel_tol * std::max(std::abs(y), std::abs(half)))) {
      ++r.kinks;
      continue;
    }
    const double x = analytic.v[i];
    const double scale = std::max(std::abs(x), std::abs(y));
    if (scale < floor) {
      r.ok = r.ok && std::abs(x - y) < floor;
      continue;
    }
    const double rel = std::abs(x - y) / scale;
    r.worst_rel = std::max(r.worst_rel, rel);
    r.ok = r.ok && rel <= rel_tol;
    ++r.compared;
  }
  return r;
}

}  // namespace testutil
