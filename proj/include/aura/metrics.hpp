#pragma once

// Full-reference image quality: PSNR, SSIM and squared-L2 energies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "aura/core.hpp"

namespace aura {

// Reported in place of +infinity for identical images.
inline constexpr double kPsnrCap = 99.0;

inline double l2_energy(const Image& a, const Image& b) {
  require_same_size(a.size(), b.size(), "l2_energy");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s;
}

inline double l2_energy(const Image& a, const Image& b, const HoleMask& region) {
  require_same_size(a.size(), b.size(), "l2_energy");
  require_same_size(a.size(), region.size(), "l2_energy");
  const int c = a.channels();
  double s = 0.0;
  for (std::size_t i = 0; i < region.pixel_count(); ++i) {
    if (!region.at_index(i)) continue;
    for (int k = 0; k < c; ++k) {
      const double d = a.at_index(i, k) - b.at_index(i, k);
      s += d * d;
    }
  }
  return s;
}

// Peak 1.0, MSE over every channel of every pixel. Capped at kPsnrCap.
inline double psnr(const Image& a, const Image& b) {
  const double mse = l2_energy(a, b) / static_cast<double>(a.data().size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

// Mean SSIM over all 8x8 windows (stride 1) and channels, k1 = 0.01,
// k2 = 0.03, dynamic range 1. Window sums come from summed-area tables.
inline double ssim(const Image& a, const Image& b) {
  require_same_size(a.size(), b.size(), "ssim");
  constexpr int kWin = 8;
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const int h = a.height();
  const int w = a.width();
  const int win_h = std::min(kWin, h);
  const int win_w = std::min(kWin, w);
  const double n = static_cast<double>(win_h) * win_w;
  const std::size_t stride = static_cast<std::size_t>(w) + 1;

  double total = 0.0;
  std::size_t windows = 0;
  for (int c = 0; c < a.channels(); ++c) {
    std::vector<double> sa((h + 1) * stride, 0.0), sb(sa), saa(sa), sbb(sa), sab(sa);
    for (int y = 0; y < h; ++y) {
      double ra = 0, rb = 0, raa = 0, rbb = 0, rab = 0;
      for (int x = 0; x < w; ++x) {
        const double va = a.at(y, x, c);
        const double vb = b.at(y, x, c);
        ra += va;
        rb += vb;
        raa += va * va;
        rbb += vb * vb;
        rab += va * vb;
        const std::size_t i = (y + 1) * stride + x + 1;
        const std::size_t up = y * stride + x + 1;
        sa[i] = sa[up] + ra;
        sb[i] = sb[up] + rb;
        saa[i] = saa[up] + raa;
        sbb[i] = sbb[up] + rbb;
        sab[i] = sab[up] + rab;
      }
    }
    auto box = [&](const std::vector<double>& s, int y0, int x0) {
      const int y1 = y0 + win_h;
      const int x1 = x0 + win_w;
      return s[y1 * stride + x1] - s[y0 * stride + x1] - s[y1 * stride + x0] + s[y0 * stride + x0];
    };
    for (int y = 0; y + win_h <= h; ++y) {
      for (int x = 0; x + win_w <= w; ++x) {
        const double ma = box(sa, y, x) / n;
        const double mb = box(sb, y, x) / n;
        const double va = std::max(0.0, box(saa, y, x) / n - ma * ma);
        const double vb = std::max(0.0, box(sbb, y, x) / n - mb * mb);
        const double cov = box(sab, y, x) / n - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace aura
