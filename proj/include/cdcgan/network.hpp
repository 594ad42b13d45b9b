#ifndef CDCGAN_NETWORK_HPP
#define CDCGAN_NETWORK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "cdcgan/activation.hpp"
#include "cdcgan/conv.hpp"
#include "cdcgan/tensor.hpp"

namespace cdcgan {

/// Static description of one convolution layer.
struct LayerSpec {
  std::size_t kh, kw, cin, cout;
  std::size_t stride;
  Padding padding;
  Activation activation;
};

struct ConvLayer {
  Tensor kernel;  // (kh, kw, cin, cout)
  std::vector<double> bias;
  std::size_t stride = 1;
  Padding padding = Padding::Same;
  Activation activation;

  [[nodiscard]] std::size_t kh() const { return kernel.shape().batch; }
  [[nodiscard]] std::size_t kw() const { return kernel.shape().height; }
  [[nodiscard]] std::size_t in_channels() const { return kernel.shape().width; }
  [[nodiscard]] std::size_t out_channels() const { return kernel.shape().channels; }
  [[nodiscard]] std::size_t parameter_count() const { return kernel.size() + bias.size(); }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

inline ConvLayer make_layer(const LayerSpec& spec) {
  ConvLayer layer;
  layer.kernel = Tensor({spec.kh, spec.kw, spec.cin, spec.cout});
  layer.bias.assign(spec.cout, 0.0);
  layer.stride = spec.stride;
  layer.padding = spec.padding;
  layer.activation = spec.activation;
  return layer;
}

/// Activations cached by a forward pass for the matching backward pass.
struct LayerTape {
  Tensor input;
  Tensor pre;
  Tensor out;
};

struct LayerGrad {
  Tensor kernel;
  std::vector<double> bias;
};

inline LayerGrad zero_grad_like(const ConvLayer& layer) {
  return {Tensor(layer.kernel.shape()), std::vector<double>(layer.bias.size(), 0.0)};
}

inline Tensor layer_forward(const ConvLayer& layer, const Tensor& input, LayerTape* tape) {
  Tensor pre = conv2d_forward(input, layer.kernel, layer.bias, layer.stride, layer.padding);
  Tensor out = activation_forward(pre, layer.activation);
  if (tape != nullptr) {
    tape->input = input;
    tape->pre = std::move(pre);
    tape->out = out;
  }
  return out;
}

/// Backpropagates through activation and convolution, adding parameter
/// gradients into `grad`. Returns the gradient w.r.t. the layer input (empty if
/// need_input_grad is false).
inline Tensor layer_backward(const ConvLayer& layer, const LayerTape& tape, const Tensor& upstream,
                             LayerGrad& grad, bool need_input_grad = true) {
  Tensor dpre = activation_backward(tape.pre, tape.out, upstream, layer.activation);
  ConvGrads g = conv2d_backward(tape.input, layer.kernel, dpre, layer.stride, layer.padding,
                                need_input_grad);
  for (std::size_t i = 0; i < grad.kernel.size(); ++i) grad.kernel[i] += g.kernel[i];
  for (std::size_t i = 0; i < grad.bias.size(); ++i) grad.bias[i] += g.bias[i];
  return std::move(g.input);
}

using Subnetwork = std::array<ConvLayer, 3>;
using SubnetworkSpec = std::array<LayerSpec, 3>;

/// S1 colour features, S2 depth features, S3 merge, S4 colour reconstruction,
/// S5 depth reconstruction.
enum Subnet : std::size_t { S1 = 0, S2 = 1, S3 = 2, S4 = 3, S5 = 4 };
inline constexpr std::size_t kSubnetCount = 5;
inline constexpr std::size_t kGeneratorLayerCount = kSubnetCount * 3;
inline constexpr std::size_t kDiscriminatorLayerCount = 3;

inline const char* subnet_name(std::size_t s) {
  static constexpr const char* names[] = {"S1", "S2", "S3", "S4", "S5"};
  return s < kSubnetCount ? names[s] : "S?";
}

namespace detail {
// Three-layer SRCNN-style block: 9x9 -> 1x1 -> 5x5, ReLU except on the last layer.
constexpr SubnetworkSpec srcnn_block(std::size_t cin, std::size_t wide, std::size_t narrow,
                                     std::size_t cout) {
  return {LayerSpec{9, 9, cin, wide, 1, Padding::Same, Activation::relu()},
          LayerSpec{1, 1, wide, narrow, 1, Padding::Same, Activation::relu()},
          LayerSpec{5, 5, narrow, cout, 1, Padding::Same, Activation::identity()}};
}
}  // namespace detail

inline std::array<SubnetworkSpec, kSubnetCount> generator_specs() {
  return {detail::srcnn_block(1, 96, 48, 1),   // S1
          detail::srcnn_block(1, 96, 48, 1),   // S2
          detail::srcnn_block(2, 64, 32, 2),   // S3
          detail::srcnn_block(3, 96, 48, 1),   // S4: merged[0], f1, f2
          detail::srcnn_block(2, 96, 48, 1)};  // S5: merged[1], f2
}

inline std::array<LayerSpec, kDiscriminatorLayerCount> discriminator_specs(double slope = 0.2) {
  return {LayerSpec{4, 4, 3, 64, 2, Padding::Same, Activation::leaky_relu(slope)},
          LayerSpec{4, 4, 64, 64, 2, Padding::Same, Activation::leaky_relu(slope)},
          LayerSpec{5, 5, 64, 1, 1, Padding::Valid, Activation::sigmoid()}};
}

struct Generator {
  std::array<Subnetwork, kSubnetCount> subnets;
  friend bool operator==(const Generator&, const Generator&) = default;
};

struct Discriminator {
  std::array<ConvLayer, kDiscriminatorLayerCount> layers;
  friend bool operator==(const Discriminator&, const Discriminator&) = default;
};

/// Canonical layer order: S1.0, S1.1, S1.2, S2.0, ... S5.2.
template <typename G>
  requires std::is_same_v<std::remove_const_t<G>, Generator>
auto layer_list(G& gen) {
  using Ptr = std::conditional_t<std::is_const_v<G>, const ConvLayer*, ConvLayer*>;
  std::vector<Ptr> out;
  out.reserve(kGeneratorLayerCount);
  for (auto& subnet : gen.subnets) {
    for (auto& layer : subnet) out.push_back(&layer);
  }
  return out;
}

template <typename D>
  requires std::is_same_v<std::remove_const_t<D>, Discriminator>
auto layer_list(D& disc) {
  using Ptr = std::conditional_t<std::is_const_v<D>, const ConvLayer*, ConvLayer*>;
  std::vector<Ptr> out;
  for (auto& layer : disc.layers) out.push_back(&layer);
  return out;
}

inline std::string layer_name(const Generator&, std::size_t i) {
  return std::string(subnet_name(i / 3)) + ".conv" + std::to_string(i % 3);
}
inline std::string layer_name(const Discriminator&, std::size_t i) {
  return "D.conv" + std::to_string(i);
}

namespace detail {
inline void init_fan_in(ConvLayer& layer, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(layer.kh() * layer.kw() * layer.in_channels());
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& w : layer.kernel.values()) w = dist(rng);
  std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}
}  // namespace detail

/// All-zero generator with the canonical shapes.
inline Generator zero_generator() {
  Generator g;
  const auto specs = generator_specs();
  for (std::size_t s = 0; s < kSubnetCount; ++s) {
    for (std::size_t l = 0; l < 3; ++l) g.subnets[s][l] = make_layer(specs[s][l]);
  }
  return g;
}

inline Discriminator zero_discriminator(double slope = 0.2) {
  Discriminator d;
  const auto specs = discriminator_specs(slope);
  for (std::size_t l = 0; l < kDiscriminatorLayerCount; ++l) d.layers[l] = make_layer(specs[l]);
  return d;
}

/// Kernels ~ N(0, 2 / (kh * kw * cin)), biases zero; deterministic per seed.
inline Generator build_generator(std::uint64_t seed) {
  Generator g = zero_generator();
  std::mt19937_64 rng(seed);
  for (ConvLayer* layer : layer_list(g)) detail::init_fan_in(*layer, rng);
  return g;
}

inline Discriminator build_discriminator(std::uint64_t seed, double slope = 0.2) {
  Discriminator d = zero_discriminator(slope);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (ConvLayer* layer : layer_list(d)) detail::init_fan_in(*layer, rng);
  return d;
}

inline std::size_t count_parameters(const Subnetwork& subnet) {
  std::size_t n = 0;
  for (const auto& layer : subnet) n += layer.parameter_count();
  return n;
}
inline std::size_t count_parameters(const Generator& g) {
  std::size_t n = 0;
  for (const auto& s : g.subnets) n += count_parameters(s);
  return n;
}
inline std::size_t count_parameters(const Discriminator& d) {
  std::size_t n = 0;
  for (const auto& layer : d.layers) n += layer.parameter_count();
  return n;
}
inline std::size_t count_parameters(std::span<const ConvLayer> layers) {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.parameter_count();
  return n;
}

// ---------------------------------------------------------------------------
// Generator

struct GeneratorOutput {
  Tensor x;  ///< HR luma estimate
  Tensor y;  ///< HR depth estimate
  std::array<Tensor, kSubnetCount> taps;  ///< outputs of S1..S5
};

struct GeneratorTape {
  std::array<std::array<LayerTape, 3>, kSubnetCount> layers;
};

inline Tensor subnet_forward(const Subnetwork& subnet, const Tensor& input,
                             std::array<LayerTape, 3>* tape) {
  Tensor h = input;
  for (std::size_t l = 0; l < 3; ++l) {
    h = layer_forward(subnet[l], h, tape != nullptr ? &(*tape)[l] : nullptr);
  }
  return h;
}

inline Tensor subnet_backward(const Subnetwork& subnet, const std::array<LayerTape, 3>& tape,
                              const Tensor& upstream, std::span<LayerGrad, 3> grads,
                              bool need_input_grad) {
  Tensor g = upstream;
  for (std::size_t l = 3; l-- > 0;) {
    g = layer_backward(subnet[l], tape[l], g, grads[l], l > 0 || need_input_grad);
  }
  return g;
}

/// Runs the five-subnetwork generator on pre-upsampled luma and depth planes.
///
///   f1 = S1(c), f2 = S2(d), m = S3([f1, f2])
///   x  = S4([m0, f1, f2]), y = S5([m1, f2])
inline GeneratorOutput generator_forward(const Generator& gen, const Tensor& c_up,
                                         const Tensor& d_up, GeneratorTape* tape = nullptr) {
  if (c_up.shape() != d_up.shape()) {
    throw ShapeError("generator_forward: colour input " + to_string(c_up.shape()) +
                     " and depth input " + to_string(d_up.shape()) + " differ");
  }
  if (c_up.channels() != 1) throw ShapeError("generator_forward: inputs must be single-channel");
  auto t = [&](std::size_t s) { return tape != nullptr ? &tape->layers[s] : nullptr; };

  GeneratorOutput out;
  Tensor f1 = subnet_forward(gen.subnets[S1], c_up, t(S1));
  Tensor f2 = subnet_forward(gen.subnets[S2], d_up, t(S2));
  Tensor merged = subnet_forward(gen.subnets[S3], concat_channels({&f1, &f2}), t(S3));
  Tensor m_color = slice_channels(merged, 0, 1);
  Tensor m_depth = slice_channels(merged, 1, 1);
  out.x = subnet_forward(gen.subnets[S4], concat_channels({&m_color, &f1, &f2}), t(S4));
  out.y = subnet_forward(gen.subnets[S5], concat_channels({&m_depth, &f2}), t(S5));
  out.taps = {std::move(f1), std::move(f2), std::move(merged), out.x, out.y};
  return out;
}

inline std::vector<LayerGrad> zero_grads(const Generator& gen) {
  std::vector<LayerGrad> grads;
  for (const ConvLayer* layer : layer_list(gen)) grads.push_back(zero_grad_like(*layer));
  return grads;
}
inline std::vector<LayerGrad> zero_grads(const Discriminator& disc) {
  std::vector<LayerGrad> grads;
  for (const ConvLayer* layer : layer_list(disc)) grads.push_back(zero_grad_like(*layer));
  return grads;
}

/// Parameter gradients (canonical layer order) for upstream gradients on x and
/// y. Either upstream may be empty, meaning zero.
inline std::vector<LayerGrad> generator_backward(const Generator& gen, const GeneratorTape& tape,
                                                 const Tensor& grad_x, const Tensor& grad_y) {
  std::vector<LayerGrad> grads = zero_grads(gen);
  auto slot = [&](std::size_t s) { return std::span<LayerGrad, 3>(grads.data() + 3 * s, 3); };

  const Shape plane = tape.layers[S1][0].input.shape();
  Tensor g_f1(plane), g_f2(plane);
  Tensor g_merged({plane.batch, plane.height, plane.width, 2});

  if (!grad_x.empty()) {
    Tensor g_in = subnet_backward(gen.subnets[S4], tape.layers[S4], grad_x, slot(S4), true);
    accumulate_channels(g_merged, 0, slice_channels(g_in, 0, 1));
    accumulate_channels(g_f1, 0, slice_channels(g_in, 1, 1));
    accumulate_channels(g_f2, 0, slice_channels(g_in, 2, 1));
  }
  if (!grad_y.empty()) {
    Tensor g_in = subnet_backward(gen.subnets[S5], tape.layers[S5], grad_y, slot(S5), true);
    accumulate_channels(g_merged, 1, slice_channels(g_in, 0, 1));
    accumulate_channels(g_f2, 0, slice_channels(g_in, 1, 1));
  }
  Tensor g_s3 = subnet_backward(gen.subnets[S3], tape.layers[S3], g_merged, slot(S3), true);
  accumulate_channels(g_f1, 0, slice_channels(g_s3, 0, 1));
  accumulate_channels(g_f2, 0, slice_channels(g_s3, 1, 1));
  subnet_backward(gen.subnets[S1], tape.layers[S1], g_f1, slot(S1), false);
  subnet_backward(gen.subnets[S2], tape.layers[S2], g_f2, slot(S2), false);
  return grads;
}

// ---------------------------------------------------------------------------
// Discriminator

struct DiscriminatorTape {
  std::array<LayerTape, kDiscriminatorLayerCount> layers;
};

/// Probability map for a 3-channel image; 32x32 -> 4x4.
inline Tensor discriminator_forward(const Discriminator& disc, const Tensor& image,
                                    DiscriminatorTape* tape = nullptr) {
  if (image.channels() != disc.layers[0].in_channels()) {
    throw ShapeError("discriminator_forward: expected " +
                     std::to_string(disc.layers[0].in_channels()) + " channels, got " +
                     std::to_string(image.channels()));
  }
  Tensor h = image;
  for (std::size_t l = 0; l < kDiscriminatorLayerCount; ++l) {
    h = layer_forward(disc.layers[l], h, tape != nullptr ? &tape->layers[l] : nullptr);
  }
  return h;
}

struct DiscriminatorBackward {
  Tensor input;                  ///< d/d image
  std::vector<LayerGrad> params; ///< canonical order
};

inline DiscriminatorBackward discriminator_backward(const Discriminator& disc,
                                                    const DiscriminatorTape& tape,
                                                    const Tensor& upstream,
                                                    bool need_input_grad = true) {
  DiscriminatorBackward out;
  out.params = zero_grads(disc);
  Tensor g = upstream;
  for (std::size_t l = kDiscriminatorLayerCount; l-- > 0;) {
    g = layer_backward(disc.layers[l], tape.layers[l], g, out.params[l], l > 0 || need_input_grad);
  }
  out.input = std::move(g);
  return out;
}

/// Per-item mean of a (B, h, w, 1) probability map.
inline std::vector<double> map_means(const Tensor& map) {
  std::vector<double> means(map.batch(), 0.0);
  const std::size_t n = map.height() * map.width() * map.channels();
  for (std::size_t b = 0; b < map.batch(); ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += map[b * n + i];
    means[b] = s / static_cast<double>(n);
  }
  return means;
}

/// Spreads per-item gradients of the mean back over a map of the given shape.
inline Tensor map_means_backward(const Shape& map_shape, std::span<const double> grad_means) {
  Tensor g(map_shape);
  const std::size_t n = map_shape.height * map_shape.width * map_shape.channels;
  for (std::size_t b = 0; b < map_shape.batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) g[b * n + i] = grad_means[b] / static_cast<double>(n);
  }
  return g;
}

}  // namespace cdcgan

#endif  // CDCGAN_NETWORK_HPP
