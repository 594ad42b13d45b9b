#ifndef CDCGAN_RESIZE_HPP
#define CDCGAN_RESIZE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Rational resize factor num/den.
struct Scale {
  std::size_t num = 1;
  std::size_t den = 1;

  static constexpr Scale up(std::size_t f) { return {f, 1}; }
  static constexpr Scale down(std::size_t f) { return {1, f}; }
  [[nodiscard]] constexpr double value() const { return static_cast<double>(num) / den; }
};

/// round(extent * num / den), halves rounded up.
inline std::size_t scaled_extent(std::size_t extent, Scale s) {
  return (2 * extent * s.num + s.den) / (2 * s.den);
}

namespace detail {

inline double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
};

// Pixel-centre aligned sampling positions with replicated edges.
inline std::vector<Taps> resize_taps(std::size_t in, std::size_t out, Scale s) {
  std::vector<Taps> taps(out);
  const double inv = static_cast<double>(s.den) / static_cast<double>(s.num);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  for (std::size_t i = 0; i < out; ++i) {
    const double src = (static_cast<double>(i) + 0.5) * inv - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int k = 0; k < 4; ++k) {
      auto idx = static_cast<std::ptrdiff_t>(base) + k - 1;
      idx = idx < 0 ? 0 : (idx > last ? last : idx);
      taps[i].index[k] = static_cast<std::size_t>(idx);
      taps[i].weight[k] = catmull_rom(t - static_cast<double>(k - 1));
    }
  }
  return taps;
}

}  // namespace detail

/// Separable bicubic (Catmull-Rom, a = -0.5) resize of every batch item and channel.
/// Taps are accumulated relative to the nearest source pixel, so flat regions
/// come out bit-identical.
inline Tensor bicubic_resize(const Tensor& image, Scale scale) {
  if (scale.num == 0 || scale.den == 0) throw std::invalid_argument("bicubic_resize: zero scale");
  const std::size_t out_h = scaled_extent(image.height(), scale);
  const std::size_t out_w = scaled_extent(image.width(), scale);
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("bicubic_resize: output would be " + std::to_string(out_h) + "x" +
                     std::to_string(out_w));
  }
  if (out_h == image.height() && out_w == image.width() && scale.num == scale.den) return image;

  const auto htaps = detail::resize_taps(image.width(), out_w, scale);
  const auto vtaps = detail::resize_taps(image.height(), out_h, scale);
  const std::size_t c = image.channels();

  Tensor horiz({image.batch(), image.height(), out_w, c});
  for (std::size_t b = 0; b < image.batch(); ++b) {
    for (std::size_t y = 0; y < image.height(); ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double ref = image(b, y, htaps[x].index[1], ch);
          double acc = 0.0;
          for (int k = 0; k < 4; ++k) acc += htaps[x].weight[k] * (image(b, y, htaps[x].index[k], ch) - ref);
          horiz(b, y, x, ch) = ref + acc;
        }
      }
    }
  }
  Tensor out({image.batch(), out_h, out_w, c});
  for (std::size_t b = 0; b < image.batch(); ++b) {
    for (std::size_t y = 0; y < out_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double ref = horiz(b, vtaps[y].index[1], x, ch);
          double acc = 0.0;
          for (int k = 0; k < 4; ++k) acc += vtaps[y].weight[k] * (horiz(b, vtaps[y].index[k], x, ch) - ref);
          out(b, y, x, ch) = ref + acc;
        }
      }
    }
  }
  return out;
}

}  // namespace cdcgan

#endif  // CDCGAN_RESIZE_HPP
