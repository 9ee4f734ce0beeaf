#pragma once

// Straight-from-definition scalar implementations used as independent oracles.
// Nothing here calls into the library's metric or loss code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

struct Grid {
  int h = 0, w = 0;
  std::vector<double> v;
  Grid(int h_, int w_, double fill = 0) : h(h_), w(w_), v(static_cast<std::size_t>(h_ * w_), fill) {}
  double& operator()(int y, int x) { return v[static_cast<std::size_t>(y * w + x)]; }
  double operator()(int y, int x) const { return v[static_cast<std::size_t>(y * w + x)]; }
};

inline Grid random_grid(int h, int w, std::mt19937_64& rng, double lo = 0, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Grid g(h, w);
  for (auto& x : g.v) x = u(rng);
  return g;
}

inline double mean(const Grid& g) {
  double s = 0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) s += g(y, x);
  return s / (g.h * g.w);
}

inline double sd(const Grid& g) {
  const double m = mean(g);
  double s = 0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) s += (g(y, x) - m) * (g(y, x) - m);
  return std::sqrt(s / (g.h * g.w));
}

inline double ag(const Grid& g) {
  double s = 0;
  int n = 0;
  for (int y = 0; y < g.h - 1; ++y)
    for (int x = 0; x < g.w - 1; ++x, ++n) {
      const double gx = g(y, x + 1) - g(y, x), gy = g(y + 1, x) - g(y, x);
      s += std::sqrt(0.5 * gx * gx + 0.5 * gy * gy);
    }
  return s / n;
}

inline double sf(const Grid& g) {
  double rf = 0, cf = 0;
  int nr = 0, nc = 0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 1; x < g.w; ++x, ++nr) rf += std::pow(g(y, x) - g(y, x - 1), 2);
  for (int y = 1; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x, ++nc) cf += std::pow(g(y, x) - g(y - 1, x), 2);
  return std::sqrt(rf / nr + cf / nc);
}

inline double pearson(const Grid& a, const Grid& b) {
  const double ma = mean(a), mb = mean(b);
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    num += (a.v[i] - ma) * (b.v[i] - mb);
    da += (a.v[i] - ma) * (a.v[i] - ma);
    db += (b.v[i] - mb) * (b.v[i] - mb);
  }
  return num / std::sqrt(da * db);
}

inline double scd(const Grid& f, const Grid& a, const Grid& b) {
  Grid fb(f.h, f.w), fa(f.h, f.w);
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    fb.v[i] = f.v[i] - b.v[i];
    fa.v[i] = f.v[i] - a.v[i];
  }
  return pearson(fb, a) + pearson(fa, b);
}

// Multi-scale VIF for fusion: 2x2 mean-pool pyramid, 4 scales, non-overlapping
// 2x2 blocks, scalar GSM gain per block, noise variance 2, pooled as
// total information preserved / total source information over both sources.
inline Grid downsample(const Grid& g) {
  Grid out(g.h / 2, g.w / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0;
      for (int k = 0; k < 4; ++k) s += g(2 * y + k / 2, 2 * x + k % 2);
      out(y, x) = s / 4;
    }
  return out;
}

inline void vif_block_sums(const Grid& ref, const Grid& dist, double& num, double& den) {
  const double eps = 1e-10, sn2 = 2.0;
  for (int y = 0; y + 2 <= ref.h; y += 2)
    for (int x = 0; x + 2 <= ref.w; x += 2) {
      double r[4], d[4];
      for (int k = 0; k < 4; ++k) {
        r[k] = ref(y + k / 2, x + k % 2);
        d[k] = dist(y + k / 2, x + k % 2);
      }
      const double mr = (r[0] + r[1] + r[2] + r[3]) / 4, md = (d[0] + d[1] + d[2] + d[3]) / 4;
      double vr = 0, vd = 0, c = 0;
      for (int k = 0; k < 4; ++k) {
        vr += (r[k] - mr) * (r[k] - mr) / 4;
        vd += (d[k] - md) * (d[k] - md) / 4;
        c += (r[k] - mr) * (d[k] - md) / 4;
      }
      double g = vr < eps ? 0.0 : c / vr;
      double sv = vr < eps ? vd : vd - g * c;
      if (vd < eps) g = 0, sv = 0;
      if (g < 0) g = 0, sv = vd;
      if (sv < eps) sv = eps;
      num += std::log(1 + g * g * vr / (sv + sn2)) / std::log(2.0);
      den += std::log(1 + vr / sn2) / std::log(2.0);
    }
}

inline double viff(const Grid& f, const Grid& a, const Grid& b) {
  double num = 0, den = 0;
  for (const Grid* s : {&a, &b}) {
    Grid r = *s, d = f;
    for (int scale = 0; scale < 4; ++scale) {
      vif_block_sums(r, d, num, den);
      r = downsample(r);
      d = downsample(d);
    }
  }
  return num / den;
}

// Windowed SSIM with an 11x11 Gaussian (sigma 1.5), replicate borders.
inline double ssim(const Grid& x, const Grid& y, double range = 1.0) {
  double w[11][11], tot = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) tot += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double acc = 0;
  for (int py = 0; py < x.h; ++py)
    for (int px = 0; px < x.w; ++px) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const int sy = std::clamp(py + i - 5, 0, x.h - 1), sx = std::clamp(px + j - 5, 0, x.w - 1);
          const double k = w[i][j] / tot, a = x(sy, sx), b = y(sy, sx);
          mx += k * a;
          my += k * b;
          xx += k * a * a;
          yy += k * b * b;
          xy += k * a * b;
        }
      const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  return acc / (x.h * x.w);
}

// |Sobel_x| + |Sobel_y| with mirror (no edge repeat) borders.
inline Grid sobel(const Grid& g) {
  auto at = [&](int y, int x) {
    y = y < 0 ? -y : (y >= g.h ? 2 * g.h - 2 - y : y);
    x = x < 0 ? -x : (x >= g.w ? 2 * g.w - 2 - x : x);
    return g(y, x);
  };
  Grid out(g.h, g.w);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      out(y, x) = std::abs(gx) + std::abs(gy);
    }
  return out;
}

inline double loss_int(const Grid& f, const Grid& a, const Grid& b) {
  double s = 0;
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) s += std::abs(f(y, x) - std::max(a(y, x), b(y, x)));
  return s / (f.h * f.w);
}

inline double loss_grad(const Grid& f, const Grid& a, const Grid& b) {
  const Grid gf = sobel(f), ga = sobel(a), gb = sobel(b);
  double s = 0;
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x) s += std::abs(gf(y, x) - std::max(ga(y, x), gb(y, x)));
  return s / (f.h * f.w);
}

/// Central finite differences of a scalar function of a grid.
inline Grid finite_difference(const std::function<double(const Grid&)>& fn, Grid at, double h = 1e-4) {
  Grid grad(at.h, at.w);
  for (std::size_t i = 0; i < at.v.size(); ++i) {
    const double orig = at.v[i];
    at.v[i] = orig + h;
    const double up = fn(at);
    at.v[i] = orig - h;
    const double down = fn(at);
    at.v[i] = orig;
    grad.v[i] = (up - down) / (2 * h);
  }
  return grad;
}

/// Mean over all unordered pixel pairs of cosine similarity of channel vectors,
/// vectors given as [pixel][channel].
inline double mean_pairwise_cosine(const std::vector<std::vector<double>>& vecs, double eps = 1e-12) {
  if (vecs.size() < 2) return 1.0;
  double s = 0;
  long n = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j, ++n) {
      double dot = 0, ni = 0, nj = 0;
      for (std::size_t c = 0; c < vecs[i].size(); ++c) {
        dot += vecs[i][c] * vecs[j][c];
        ni += vecs[i][c] * vecs[i][c];
        nj += vecs[j][c] * vecs[j][c];
      }
      s += dot / (std::sqrt(ni + eps) * std::sqrt(nj + eps));
    }
  return s / n;
}

}  // namespace oracle
