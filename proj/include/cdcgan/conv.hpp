#ifndef CDCGAN_CONV_HPP
#define CDCGAN_CONV_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cdcgan/parallel.hpp"
#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Same: output = ceil(in / stride), zero fill split floor/ceil between the
/// leading and trailing edge. Valid: no padding, output = floor((in - k) / stride) + 1.
enum class Padding { Same, Valid };

inline const char* to_string(Padding p) { return p == Padding::Same ? "same" : "valid"; }

struct ConvGeometry {
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  std::ptrdiff_t pad_top = 0;
  std::ptrdiff_t pad_left = 0;
};

namespace detail {
inline void axis_geometry(std::size_t in, std::size_t k, std::size_t stride, Padding padding,
                          std::size_t& out, std::ptrdiff_t& pad_lead) {
  if (padding == Padding::Same) {
    out = (in + stride - 1) / stride;
    const std::ptrdiff_t needed = static_cast<std::ptrdiff_t>((out - 1) * stride + k) -
                                  static_cast<std::ptrdiff_t>(in);
    pad_lead = needed > 0 ? needed / 2 : 0;
  } else {
    out = in >= k ? (in - k) / stride + 1 : 0;
    pad_lead = 0;
  }
}
}  // namespace detail

inline ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t kh,
                                  std::size_t kw, std::size_t stride, Padding padding) {
  if (stride < 1) throw ShapeError("convolution stride must be >= 1");
  ConvGeometry g;
  detail::axis_geometry(in_h, kh, stride, padding, g.out_h, g.pad_top);
  detail::axis_geometry(in_w, kw, stride, padding, g.out_w, g.pad_left);
  if (g.out_h < 1 || g.out_w < 1) {
    throw ShapeError("convolution output would be empty: input " + std::to_string(in_h) + "x" +
                     std::to_string(in_w) + ", kernel " + std::to_string(kh) + "x" +
                     std::to_string(kw) + ", " + to_string(padding));
  }
  return g;
}

namespace detail {
inline void check_conv_args(const Tensor& input, const Tensor& kernel, std::size_t bias_len) {
  // kernel layout (kh, kw, cin, cout) maps onto Shape{batch, height, width, channels}.
  const std::size_t cin = kernel.shape().width;
  const std::size_t cout = kernel.shape().channels;
  if (input.channels() != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(input.channels()) +
                     " channels, kernel expects " + std::to_string(cin));
  }
  if (bias_len != cout) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias_len) +
                     " does not match kernel output channels " + std::to_string(cout));
  }
}
}  // namespace detail

/// Cross-correlation (no kernel flip) of an NHWC input with a (kh, kw, cin, cout) kernel.
inline Tensor conv2d_forward(const Tensor& input, const Tensor& kernel,
                             std::span<const double> bias, std::size_t stride, Padding padding) {
  detail::check_conv_args(input, kernel, bias.size());
  const std::size_t kh = kernel.shape().batch, kw = kernel.shape().height;
  const std::size_t cin = kernel.shape().width, cout = kernel.shape().channels;
  const ConvGeometry g = conv_geometry(input.height(), input.width(), kh, kw, stride, padding);
  const std::size_t n = input.batch();
  const auto in_h = static_cast<std::ptrdiff_t>(input.height());
  const auto in_w = static_cast<std::ptrdiff_t>(input.width());

  Tensor out({n, g.out_h, g.out_w, cout});
  const double* kdata = kernel.data();
  parallel_for(n * g.out_h, [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t b = row / g.out_h, oy = row % g.out_h;
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        double* acc = &out(b, oy, ox, 0);
        for (std::size_t o = 0; o < cout; ++o) acc[o] = bias[o];
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * stride + ky) - g.pad_top;
          if (iy < 0 || iy >= in_h) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * stride + kx) - g.pad_left;
            if (ix < 0 || ix >= in_w) continue;
            const double* in = &input(b, static_cast<std::size_t>(iy),
                                      static_cast<std::size_t>(ix), 0);
            const double* tap = kdata + (ky * kw + kx) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = in[ci];
              const double* krow = tap + ci * cout;
              for (std::size_t o = 0; o < cout; ++o) acc[o] += v * krow[o];
            }
          }
        }
      }
    }
  });
  return out;
}

struct ConvGrads {
  Tensor input;   ///< empty when not requested
  Tensor kernel;
  std::vector<double> bias;
};

/// Exact gradients of conv2d_forward given the upstream gradient of its output.
/// Set need_input_grad=false for layers fed directly by data.
inline ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel,
                                 const Tensor& upstream, std::size_t stride, Padding padding,
                                 bool need_input_grad = true) {
  const std::size_t kh = kernel.shape().batch, kw = kernel.shape().height;
  const std::size_t cin = kernel.shape().width, cout = kernel.shape().channels;
  if (input.channels() != cin) {
    throw ShapeError("conv2d_backward: input channels do not match kernel");
  }
  const ConvGeometry g = conv_geometry(input.height(), input.width(), kh, kw, stride, padding);
  const Shape expected{input.batch(), g.out_h, g.out_w, cout};
  if (upstream.shape() != expected) {
    throw ShapeError("conv2d_backward: upstream gradient " + to_string(upstream.shape()) +
                     " does not match forward output " + to_string(expected));
  }
  const std::size_t n = input.batch();
  const auto in_h = static_cast<std::ptrdiff_t>(input.height());
  const auto in_w = static_cast<std::ptrdiff_t>(input.width());
  const auto s = static_cast<std::ptrdiff_t>(stride);

  ConvGrads grads;
  grads.kernel = Tensor(kernel.shape());
  grads.bias.assign(cout, 0.0);

  for (std::size_t p = 0; p < n * g.out_h * g.out_w; ++p) {
    const double* u = upstream.data() + p * cout;
    for (std::size_t o = 0; o < cout; ++o) grads.bias[o] += u[o];
  }

  // Each task owns one kernel tap (ky, kx); summation order is fixed per element.
  parallel_for(kh * kw, [&](std::size_t begin, std::size_t end) {
    for (std::size_t tap_index = begin; tap_index < end; ++tap_index) {
      const std::size_t ky = tap_index / kw, kx = tap_index % kw;
      double* gtap = grads.kernel.data() + tap_index * cin * cout;
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - g.pad_top;
          if (iy < 0 || iy >= in_h) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - g.pad_left;
            if (ix < 0 || ix >= in_w) continue;
            const double* in =
                &input(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
            const double* u = &upstream(b, oy, ox, 0);
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = in[ci];
              double* grow = gtap + ci * cout;
              for (std::size_t o = 0; o < cout; ++o) grow[o] += v * u[o];
            }
          }
        }
      }
    }
  });

  if (!need_input_grad) return grads;

  // Kernel transposed to (kh, kw, cout, cin) so the innermost loop runs over cin.
  std::vector<double> kt(kernel.size());
  for (std::size_t tap = 0; tap < kh * kw; ++tap) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t o = 0; o < cout; ++o) {
        kt[(tap * cout + o) * cin + ci] = kernel[(tap * cin + ci) * cout + o];
      }
    }
  }

  grads.input = Tensor(input.shape());
  parallel_for(n * input.height(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const std::size_t b = row / input.height();
      const auto iy = static_cast<std::ptrdiff_t>(row % input.height());
      for (std::ptrdiff_t ix = 0; ix < in_w; ++ix) {
        double* gi = &grads.input(b, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const std::ptrdiff_t ty = iy + g.pad_top - static_cast<std::ptrdiff_t>(ky);
          if (ty < 0 || ty % s != 0) continue;
          const std::size_t oy = static_cast<std::size_t>(ty / s);
          if (oy >= g.out_h) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t tx = ix + g.pad_left - static_cast<std::ptrdiff_t>(kx);
            if (tx < 0 || tx % s != 0) continue;
            const std::size_t ox = static_cast<std::size_t>(tx / s);
            if (ox >= g.out_w) continue;
            const double* u = &upstream(b, oy, ox, 0);
            const double* ktap = kt.data() + (ky * kw + kx) * cout * cin;
            for (std::size_t o = 0; o < cout; ++o) {
              const double uo = u[o];
              const double* krow = ktap + o * cin;
              for (std::size_t ci = 0; ci < cin; ++ci) gi[ci] += uo * krow[ci];
            }
          }
        }
      }
    }
  });
  return grads;
}

}  // namespace cdcgan

#endif  // CDCGAN_CONV_HPP
