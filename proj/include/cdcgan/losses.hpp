#ifndef CDCGAN_LOSSES_HPP
#define CDCGAN_LOSSES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Per-term losses of one generator/discriminator update.
struct LossBreakdown {
  double data = 0.0;
  double tv = 0.0;
  double gd = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;
  double total_g = 0.0;
};

/// Scalar loss with gradients w.r.t. the generated colour (x) and depth (y) planes.
struct PairLoss {
  double value = 0.0;
  Tensor grad_x;
  Tensor grad_y;
};

namespace detail {

// Subgradient of |v| with sign(0) = 0.
inline double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

inline void check_planes(const Tensor& x, const Tensor& y, const char* what) {
  require_same_shape(x, y, what);
  if (x.channels() != 1) throw ShapeError(std::string(what) + ": planes must be single-channel");
}

// Mean over batch items and pixels: 1 / (B * M * N).
inline double plane_norm(const Tensor& t) {
  return 1.0 / static_cast<double>(t.batch() * t.height() * t.width());
}

}  // namespace detail

/// (1 / MN) sum_i |X(i) - Cg(i)| + |Y(i) - Dg(i)|, averaged over the batch.
inline PairLoss data_loss(const Tensor& x, const Tensor& y, const Tensor& c_g, const Tensor& d_g) {
  detail::check_planes(x, y, "data_loss");
  require_same_shape(x, c_g, "data_loss");
  require_same_shape(y, d_g, "data_loss");
  const double norm = detail::plane_norm(x);
  PairLoss out{0.0, Tensor(x.shape()), Tensor(y.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ex = x[i] - c_g[i];
    const double ey = y[i] - d_g[i];
    sum += std::abs(ex) + std::abs(ey);
    out.grad_x[i] = detail::sign(ex) * norm;
    out.grad_y[i] = detail::sign(ey) * norm;
  }
  out.value = sum * norm;
  return out;
}

namespace detail {
// Adds sum |forward differences| of one plane and its subgradient.
inline double tv_plane(const Tensor& p, Tensor& grad, double norm) {
  double sum = 0.0;
  const std::size_t h = p.height(), w = p.width();
  for (std::size_t b = 0; b < p.batch(); ++b) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double v = p(b, i, j, 0);
        if (j + 1 < w) {
          const double dx = p(b, i, j + 1, 0) - v;
          sum += std::abs(dx);
          grad(b, i, j + 1, 0) += sign(dx) * norm;
          grad(b, i, j, 0) -= sign(dx) * norm;
        }
        if (i + 1 < h) {
          const double dy = p(b, i + 1, j, 0) - v;
          sum += std::abs(dy);
          grad(b, i + 1, j, 0) += sign(dy) * norm;
          grad(b, i, j, 0) -= sign(dy) * norm;
        }
      }
    }
  }
  return sum;
}
}  // namespace detail

/// Anisotropic L1 total variation of both planes with forward differences;
/// differences past the last row/column are dropped.
inline PairLoss tv_loss(const Tensor& x, const Tensor& y) {
  detail::check_planes(x, y, "tv_loss");
  const double norm = detail::plane_norm(x);
  PairLoss out{0.0, Tensor(x.shape()), Tensor(y.shape())};
  const double sum = detail::tv_plane(x, out.grad_x, norm) + detail::tv_plane(y, out.grad_y, norm);
  out.value = sum * norm;
  return out;
}

/// The eight neighbour offsets (dy, dx).
inline constexpr std::array<std::array<int, 2>, 8> kNeighbourOffsets = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};

namespace detail {
inline double gd_plane(const Tensor& p, const Tensor& ref, Tensor& grad, double norm) {
  double sum = 0.0;
  const auto h = static_cast<std::ptrdiff_t>(p.height());
  const auto w = static_cast<std::ptrdiff_t>(p.width());
  for (std::size_t b = 0; b < p.batch(); ++b) {
    for (std::ptrdiff_t i = 0; i < h; ++i) {
      for (std::ptrdiff_t j = 0; j < w; ++j) {
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        for (const auto& [dy, dx] : kNeighbourOffsets) {
          const std::ptrdiff_t ni = i + dy, nj = j + dx;
          if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
          const auto uni = static_cast<std::size_t>(ni), unj = static_cast<std::size_t>(nj);
          const double diff = (p(b, uni, unj, 0) - p(b, ui, uj, 0)) -
                              (ref(b, uni, unj, 0) - ref(b, ui, uj, 0));
          sum += std::abs(diff);
          const double s = sign(diff) * norm;
          grad(b, uni, unj, 0) += s;
          grad(b, ui, uj, 0) -= s;
        }
      }
    }
  }
  return sum;
}
}  // namespace detail

/// 8-connected gradient difference: for every pixel and every in-bounds
/// neighbour k, |grad_k X - grad_k Cg| + |grad_k Y - grad_k Dg|, summed over k
/// and divided by MN (no per-offset normalisation).
inline PairLoss gd_loss(const Tensor& x, const Tensor& y, const Tensor& c_g, const Tensor& d_g) {
  detail::check_planes(x, y, "gd_loss");
  require_same_shape(x, c_g, "gd_loss");
  require_same_shape(y, d_g, "gd_loss");
  const double norm = detail::plane_norm(x);
  PairLoss out{0.0, Tensor(x.shape()), Tensor(y.shape())};
  const double sum = detail::gd_plane(x, c_g, out.grad_x, norm) +
                     detail::gd_plane(y, d_g, out.grad_y, norm);
  out.value = sum * norm;
  return out;
}

inline constexpr double kProbabilityClamp = 1e-7;

/// Discriminator and non-saturating generator losses over a batch of mean
/// probabilities, with gradients w.r.t. each probability. Probabilities are
/// clamped to [1e-7, 1 - 1e-7]; the gradient is zero where clamping is active.
struct AdversarialLoss {
  double adv_d = 0.0;  ///< mean -[log D(real) + log(1 - D(fake))]
  double adv_g = 0.0;  ///< mean -log D(fake)
  std::vector<double> d_adv_d_d_real;
  std::vector<double> d_adv_d_d_fake;
  std::vector<double> d_adv_g_d_fake;
};

inline AdversarialLoss adversarial_losses(std::span<const double> d_real,
                                          std::span<const double> d_fake) {
  if (d_real.size() != d_fake.size() || d_real.empty()) {
    throw std::invalid_argument("adversarial_losses: need equally many real and fake scores");
  }
  const double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
  const double inv_n = 1.0 / static_cast<double>(d_real.size());
  AdversarialLoss out;
  out.d_adv_d_d_real.resize(d_real.size());
  out.d_adv_d_d_fake.resize(d_real.size());
  out.d_adv_g_d_fake.resize(d_real.size());
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    const double r = std::clamp(d_real[i], lo, hi);
    const double f = std::clamp(d_fake[i], lo, hi);
    out.adv_d += -(std::log(r) + std::log1p(-f)) * inv_n;
    out.adv_g += -std::log(f) * inv_n;
    const bool r_free = d_real[i] > lo && d_real[i] < hi;
    const bool f_free = d_fake[i] > lo && d_fake[i] < hi;
    out.d_adv_d_d_real[i] = r_free ? -inv_n / r : 0.0;
    out.d_adv_d_d_fake[i] = f_free ? inv_n / (1.0 - f) : 0.0;
    out.d_adv_g_d_fake[i] = f_free ? -inv_n / f : 0.0;
  }
  return out;
}

inline AdversarialLoss adversarial_losses(double d_real, double d_fake) {
  return adversarial_losses(std::span<const double>(&d_real, 1), std::span<const double>(&d_fake, 1));
}

/// alpha * adv_g + data + tv + gd.
inline double total_generator_objective(double alpha, double adv_g, double data, double tv,
                                        double gd) {
  if (alpha < 0) throw std::invalid_argument("total_generator_objective: alpha must be >= 0");
  return alpha * adv_g + data + tv + gd;
}

inline double total_generator_objective(double alpha, const LossBreakdown& parts) {
  return total_generator_objective(alpha, parts.adv_g, parts.data, parts.tv, parts.gd);
}

}  // namespace cdcgan

#endif  // CDCGAN_LOSSES_HPP
