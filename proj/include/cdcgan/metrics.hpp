#ifndef CDCGAN_METRICS_HPP
#define CDCGAN_METRICS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Returned by psnr/sharpness when the two inputs agree exactly.
inline constexpr double kIdenticalDb = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) over every element.
inline double psnr(const Tensor& a, const Tensor& b, double peak = 1.0) {
  require_same_shape(a, b, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  if (sse == 0.0) return kIdenticalDb;
  return 10.0 * std::log10(peak * peak / (sse / static_cast<double>(a.size())));
}

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

inline std::array<double, kSsimWindow> ssim_gaussian() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  const double c = (kSsimWindow - 1) / 2.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Mean structural similarity over every fully-inside 11x11 Gaussian window
/// (sigma 1.5, K1 0.01, K2 0.03, dynamic range = peak). Single-channel input;
/// batch items are pooled.
inline double ssim(const Tensor& a, const Tensor& b, double peak = 1.0) {
  require_same_shape(a, b, "ssim");
  if (a.channels() != 1) throw ShapeError("ssim: expected single-channel images");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw ShapeError("ssim: image " + to_string(a.shape()) + " smaller than the 11x11 window");
  }
  const auto w = ssim_gaussian();
  const double c1 = (kSsimK1 * peak) * (kSsimK1 * peak);
  const double c2 = (kSsimK2 * peak) * (kSsimK2 * peak);
  const std::size_t oh = a.height() - kSsimWindow + 1, ow = a.width() - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t bi = 0; bi < a.batch(); ++bi) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t i = 0; i < kSsimWindow; ++i) {
          for (std::size_t j = 0; j < kSsimWindow; ++j) {
            const double wt = w[i] * w[j];
            const double va = a(bi, y + i, x + j, 0), vb = b(bi, y + i, x + j, 0);
            ma += wt * va;
            mb += wt * vb;
            // Same grouping for all three sums: SSIM(a, a) is exactly 1 and swapping
            // a and b is bit-exact.
            saa += wt * (va * va);
            sbb += wt * (vb * vb);
            sab += wt * (va * vb);
          }
        }
        const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      }
    }
  }
  return total / static_cast<double>(a.batch() * oh * ow);
}

namespace detail {
// |forward dx| + |forward dy| per pixel, zero past the last row/column.
inline std::vector<double> gradient_magnitude(const Tensor& t) {
  std::vector<double> g(t.size(), 0.0);
  for (std::size_t b = 0; b < t.batch(); ++b)
    for (std::size_t y = 0; y < t.height(); ++y)
      for (std::size_t x = 0; x < t.width(); ++x)
        for (std::size_t c = 0; c < t.channels(); ++c) {
          const double v = t(b, y, x, c);
          double s = 0.0;
          if (x + 1 < t.width()) s += std::abs(t(b, y, x + 1, c) - v);
          if (y + 1 < t.height()) s += std::abs(t(b, y + 1, x, c) - v);
          g[t.index(b, y, x, c)] = s;
        }
  return g;
}
}  // namespace detail

/// Gradient-agreement sharpness in dB:
/// 10 log10(peak^2 / mean((|dx x| + |dy x|) - (|dx ref| + |dy ref|))^2).
inline double sharpness(const Tensor& x, const Tensor& ref, double peak = 1.0) {
  require_same_shape(x, ref, "sharpness");
  const auto gx = detail::gradient_magnitude(x);
  const auto gr = detail::gradient_magnitude(ref);
  double sse = 0.0;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double d = gx[i] - gr[i];
    sse += d * d;
  }
  if (sse == 0.0) return kIdenticalDb;
  return 10.0 * std::log10(peak * peak / (sse / static_cast<double>(gx.size())));
}

}  // namespace cdcgan

#endif  // CDCGAN_METRICS_HPP
