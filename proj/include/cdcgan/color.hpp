#ifndef CDCGAN_COLOR_HPP
#define CDCGAN_COLOR_HPP

#include "cdcgan/tensor.hpp"

namespace cdcgan {

// ITU-R BT.601 full range on [0, 1] values; chroma centred at 0.5.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline Tensor rgb_to_ycbcr(const Tensor& rgb) {
  if (rgb.channels() != 3) throw ShapeError("rgb_to_ycbcr: expected 3 channels");
  Tensor out(rgb.shape());
  for (std::size_t p = 0; p < rgb.size(); p += 3) {
    const double r = rgb[p], g = rgb[p + 1], b = rgb[p + 2];
    const double y = kLumaR * r + kLumaG * g + kLumaB * b;
    out[p] = y;
    out[p + 1] = 0.5 + (b - y) / (2.0 * (1.0 - kLumaB));
    out[p + 2] = 0.5 + (r - y) / (2.0 * (1.0 - kLumaR));
  }
  return out;
}

inline Tensor ycbcr_to_rgb(const Tensor& ycc) {
  if (ycc.channels() != 3) throw ShapeError("ycbcr_to_rgb: expected 3 channels");
  Tensor out(ycc.shape());
  for (std::size_t p = 0; p < ycc.size(); p += 3) {
    const double y = ycc[p], cb = ycc[p + 1] - 0.5, cr = ycc[p + 2] - 0.5;
    const double r = y + 2.0 * (1.0 - kLumaR) * cr;
    const double b = y + 2.0 * (1.0 - kLumaB) * cb;
    const double g = (y - kLumaR * r - kLumaB * b) / kLumaG;
    out[p] = r;
    out[p + 1] = g;
    out[p + 2] = b;
  }
  return out;
}

inline void clamp_unit(Tensor& t) {
  for (double& v : t.values()) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

}  // namespace cdcgan

#endif  // CDCGAN_COLOR_HPP
