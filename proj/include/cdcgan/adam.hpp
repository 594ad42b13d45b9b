#ifndef CDCGAN_ADAM_HPP
#define CDCGAN_ADAM_HPP

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcgan/network.hpp"

namespace cdcgan {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0) || !std::isfinite(lr)) throw std::invalid_argument("adam: lr must be > 0");
    if (!(beta1 > 0 && beta1 < 1)) throw std::invalid_argument("adam: beta1 must lie in (0, 1)");
    if (!(beta2 > 0 && beta2 < 1)) throw std::invalid_argument("adam: beta2 must lie in (0, 1)");
    if (!(eps > 0)) throw std::invalid_argument("adam: eps must be > 0");
  }
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Thrown before any parameter is touched when a gradient is NaN or infinite.
class NonFiniteGradient : public std::runtime_error {
 public:
  NonFiniteGradient(std::string tensor, std::size_t coordinate, double value)
      : std::runtime_error("non-finite gradient " + std::to_string(value) + " in " + tensor +
                           " at coordinate " + std::to_string(coordinate)),
        tensor_(std::move(tensor)),
        coordinate_(coordinate) {}
  [[nodiscard]] const std::string& tensor() const noexcept { return tensor_; }
  [[nodiscard]] std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::string tensor_;
  std::size_t coordinate_;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One parameter buffer with its gradient.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<const double> grad;
};

inline AdamState adam_init(std::span<const std::size_t> param_sizes, AdamConfig config = {}) {
  config.validate();
  AdamState s;
  s.config = config;
  for (std::size_t n : param_sizes) {
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
  }
  return s;
}

/// Bias-corrected Adam update applied in place; step advances by one.
inline void adam_step(AdamState& state, std::span<const ParamRef> params) {
  if (params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: expected " + std::to_string(state.m.size()) +
                                " parameter buffers, got " + std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamRef& ref = params[p];
    if (ref.value.size() != state.m[p].size() || ref.grad.size() != ref.value.size()) {
      throw std::invalid_argument("adam_step: size mismatch for " + ref.name);
    }
    for (std::size_t i = 0; i < ref.grad.size(); ++i) {
      if (!std::isfinite(ref.grad[i])) throw NonFiniteGradient(ref.name, i, ref.grad[i]);
    }
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.m[p];
    auto& v = state.v[p];
    const ParamRef& ref = params[p];
    for (std::size_t i = 0; i < ref.value.size(); ++i) {
      const double g = ref.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      ref.value[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

// Layer-list helpers: each layer contributes its kernel then its bias.

inline std::vector<std::size_t> param_sizes(std::span<const ConvLayer* const> layers) {
  std::vector<std::size_t> sizes;
  for (const ConvLayer* l : layers) {
    sizes.push_back(l->kernel.size());
    sizes.push_back(l->bias.size());
  }
  return sizes;
}

template <typename Net>
  requires std::same_as<Net, Generator> || std::same_as<Net, Discriminator>
AdamState adam_init(const Net& net, AdamConfig config = {}) {
  const auto layers = layer_list(net);
  return adam_init(param_sizes(layers), config);
}

template <typename Net>
  requires std::same_as<Net, Generator> || std::same_as<Net, Discriminator>
void adam_step(AdamState& state, Net& net, std::span<const LayerGrad> grads) {
  auto layers = layer_list(net);
  if (grads.size() != layers.size()) throw std::invalid_argument("adam_step: gradient count");
  std::vector<ParamRef> refs;
  refs.reserve(2 * layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string name = layer_name(net, l);
    refs.push_back({name + ".kernel", layers[l]->kernel.values(), grads[l].kernel.values()});
    refs.push_back({name + ".bias", layers[l]->bias, grads[l].bias});
  }
  adam_step(state, refs);
}

}  // namespace cdcgan

#endif  // CDCGAN_ADAM_HPP
