#ifndef CDCGAN_ACTIVATION_HPP
#define CDCGAN_ACTIVATION_HPP

#include <cmath>
#include <limits>
#include <algorithm>
#include <string>

#include "cdcgan/tensor.hpp"

namespace cdcgan {

enum class ActivationKind { Identity, ReLU, LeakyReLU, Sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double slope = 0.2;  // LeakyReLU only

  static constexpr Activation identity() { return {ActivationKind::Identity, 0.0}; }
  static constexpr Activation relu() { return {ActivationKind::ReLU, 0.0}; }
  static constexpr Activation leaky_relu(double slope = 0.2) {
    return {ActivationKind::LeakyReLU, slope};
  }
  static constexpr Activation sigmoid() { return {ActivationKind::Sigmoid, 0.0}; }

  friend constexpr bool operator==(const Activation&, const Activation&) = default;
};

inline std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu(" + std::to_string(a.slope) + ")";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

/// Logistic function, kept strictly inside (0, 1) even where double rounding
/// would saturate it.
inline double sigmoid(double v) {
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (v >= 0) {
    s = 1.0 / (1.0 + std::exp(-v));
  } else {
    const double e = std::exp(v);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

inline double activate(double v, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::Identity: return v;
    case ActivationKind::ReLU: return v > 0 ? v : 0.0;
    case ActivationKind::LeakyReLU: return v > 0 ? v : a.slope * v;
    case ActivationKind::Sigmoid: return sigmoid(v);
  }
  return v;
}

/// Derivative given the pre-activation input and the activation output.
inline double activate_derivative(double pre, double post, const Activation& a) {
  switch (a.kind) {
    case ActivationKind::Identity: return 1.0;
    case ActivationKind::ReLU: return pre > 0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU: return pre > 0 ? 1.0 : a.slope;
    case ActivationKind::Sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

inline Tensor activation_forward(const Tensor& input, const Activation& a) {
  if (a.kind == ActivationKind::Identity) return input;
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = activate(input[i], a);
  return out;
}

inline Tensor activation_backward(const Tensor& pre, const Tensor& post, const Tensor& upstream,
                                  const Activation& a) {
  require_same_shape(pre, upstream, "activation_backward");
  if (a.kind == ActivationKind::Identity) return upstream;
  require_same_shape(pre, post, "activation_backward");
  Tensor out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    out[i] = upstream[i] * activate_derivative(pre[i], post[i], a);
  }
  return out;
}

}  // namespace cdcgan

#endif  // CDCGAN_ACTIVATION_HPP
