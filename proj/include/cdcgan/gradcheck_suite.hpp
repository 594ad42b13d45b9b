#ifndef CDCGAN_GRADCHECK_SUITE_HPP
#define CDCGAN_GRADCHECK_SUITE_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cdcgan/activation.hpp"
#include "cdcgan/conv.hpp"
#include "cdcgan/gradcheck.hpp"
#include "cdcgan/losses.hpp"
#include "cdcgan/network.hpp"

namespace cdcgan {

inline constexpr double kGradCheckTolerance = 1e-4;

struct ComponentCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;
  [[nodiscard]] bool passed() const { return max_relative_error < kGradCheckTolerance; }
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t probes = 40;
  /// Test hook: corrupt the analytic gradient of the named component.
  std::string mutate;
};

namespace detail {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(s);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Checks analytic gradients of several buffers against one scalar objective.
class ComponentRunner {
 public:
  ComponentRunner(std::string name, const GradCheckOptions& opts)
      : result_{std::move(name), 0.0, 0}, opts_(opts) {}

  void check(const std::function<double()>& loss, std::span<double> params,
             std::vector<double> analytic, double eps, bool skip_kinks = false) {
    if (opts_.mutate == result_.name) {
      for (double& g : analytic) g = 1.5 * g + 1e-3;
    }
    const auto r = finite_diff_check(loss, params, analytic, opts_.probes, eps,
                                     opts_.seed + 7919 * ++calls_, skip_kinks);
    result_.max_relative_error = std::max(result_.max_relative_error, r.max_relative_error);
    result_.probes += r.probes;
    result_.skipped += r.skipped;
  }
  [[nodiscard]] ComponentCheck result() const { return result_; }

 private:
  ComponentCheck result_;
  const GradCheckOptions& opts_;
  std::uint64_t calls_ = 0;
};

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

inline double weighted_sum(const Tensor& t, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * w[i];
  return s;
}

inline ComponentCheck check_conv(const std::string& name, std::size_t k, std::size_t stride,
                                 Padding padding, std::size_t size, const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ std::hash<std::string>{}(name));
  Tensor input = random_tensor({1, size, size, 2}, rng);
  Tensor kernel = random_tensor({k, k, 2, 3}, rng);
  std::vector<double> bias = to_vector(random_tensor({1, 1, 1, 3}, rng).values());
  const Tensor probe = random_tensor(
      conv2d_forward(input, kernel, bias, stride, padding).shape(), rng);
  auto loss = [&] { return weighted_sum(conv2d_forward(input, kernel, bias, stride, padding), probe); };
  const ConvGrads g = conv2d_backward(input, kernel, probe, stride, padding);

  ComponentRunner run(name, opts);
  run.check(loss, input.values(), to_vector(g.input.values()), 1e-5);
  run.check(loss, kernel.values(), to_vector(g.kernel.values()), 1e-5);
  run.check(loss, bias, g.bias, 1e-5);
  return run.result();
}

inline ComponentCheck check_activation(const std::string& name, Activation act,
                                       const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ std::hash<std::string>{}(name));
  Tensor input = random_tensor({1, 8, 8, 1}, rng);
  // Keep probes away from the kink at zero.
  for (double& v : input.values()) {
    if (std::abs(v) < 1e-3) v = 1e-2;
  }
  const Tensor probe = random_tensor(input.shape(), rng);
  auto loss = [&] { return weighted_sum(activation_forward(input, act), probe); };
  const Tensor out = activation_forward(input, act);
  const Tensor grad = activation_backward(input, out, probe, act);
  ComponentRunner run(name, opts);
  run.check(loss, input.values(), to_vector(grad.values()), 1e-6);
  return run.result();
}

inline ComponentCheck check_pair_loss(
    const std::string& name,
    const std::function<PairLoss(const Tensor&, const Tensor&, const Tensor&, const Tensor&)>& fn,
    const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ std::hash<std::string>{}(name));
  Tensor x = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  Tensor y = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  const Tensor cg = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  const Tensor dg = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  auto loss = [&] { return fn(x, y, cg, dg).value; };
  const PairLoss l = fn(x, y, cg, dg);
  ComponentRunner run(name, opts);
  // Large enough that cancelling L1 terms (true gradient 0) stay below the floor.
  run.check(loss, x.values(), to_vector(l.grad_x.values()), 1e-5);
  run.check(loss, y.values(), to_vector(l.grad_y.values()), 1e-5);
  return run.result();
}

inline ComponentCheck check_adversarial(const GradCheckOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0xad7ULL);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  std::vector<double> real(4), fake(4);
  for (double& v : real) v = prob(rng);
  for (double& v : fake) v = prob(rng);
  const AdversarialLoss a = adversarial_losses(real, fake);
  ComponentRunner run("adversarial", opts);
  run.check([&] { return adversarial_losses(real, fake).adv_d; }, real, a.d_adv_d_d_real, 1e-6);
  run.check([&] { return adversarial_losses(real, fake).adv_d; }, fake, a.d_adv_d_d_fake, 1e-6);
  run.check([&] { return adversarial_losses(real, fake).adv_g; }, fake, a.d_adv_g_d_fake, 1e-6);
  return run.result();
}

inline ComponentCheck check_generator(const GradCheckOptions& opts) {
  Generator gen = build_generator(opts.seed);
  std::mt19937_64 rng(opts.seed ^ 0x6e7ULL);
  for (ConvLayer* l : layer_list(gen)) {
    for (double& b : l->bias) b = std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
  }
  const Tensor c = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  const Tensor d = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  const Tensor cg = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  const Tensor dg = random_tensor({1, 8, 8, 1}, rng, 0.0, 1.0);
  auto objective = [&](const GeneratorOutput& o) {
    return data_loss(o.x, o.y, cg, dg).value + tv_loss(o.x, o.y).value +
           gd_loss(o.x, o.y, cg, dg).value;
  };
  auto loss = [&] { return objective(generator_forward(gen, c, d)); };

  GeneratorTape tape;
  const GeneratorOutput out = generator_forward(gen, c, d, &tape);
  const PairLoss l1 = data_loss(out.x, out.y, cg, dg);
  const PairLoss l2 = tv_loss(out.x, out.y);
  const PairLoss l3 = gd_loss(out.x, out.y, cg, dg);
  Tensor gx(out.x.shape()), gy(out.y.shape());
  for (const PairLoss* t : {&l1, &l2, &l3}) {
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += t->grad_x[i];
      gy[i] += t->grad_y[i];
    }
  }
  const auto grads = generator_backward(gen, tape, gx, gy);

  auto layers = layer_list(gen);
  // Probes are spread over every layer so each subnetwork is exercised.
  GradCheckOptions per_layer = opts;
  per_layer.probes = std::max<std::size_t>(2, opts.probes / 8);
  ComponentRunner run("generator", per_layer);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    run.check(loss, layers[li]->kernel.values(), to_vector(grads[li].kernel.values()), 1e-6, true);
    run.check(loss, layers[li]->bias, grads[li].bias, 1e-6, true);
  }
  return run.result();
}

inline ComponentCheck check_discriminator(const GradCheckOptions& opts) {
  Discriminator disc = build_discriminator(opts.seed);
  std::mt19937_64 rng(opts.seed ^ 0xd15ULL);
  // Smallest square input the stride-2 / 5x5-valid stack accepts is 17x17.
  Tensor image = random_tensor({1, 20, 20, 3}, rng, 0.0, 1.0);
  auto loss = [&] {
    const Tensor map = discriminator_forward(disc, image);
    return -std::log(map_means(map)[0]);
  };
  DiscriminatorTape tape;
  const Tensor map = discriminator_forward(disc, image, &tape);
  const double p = map_means(map)[0];
  const std::vector<double> dp = {-1.0 / p};
  const auto back = discriminator_backward(disc, tape, map_means_backward(map.shape(), dp));
  ComponentRunner run("discriminator", opts);
  run.check(loss, image.values(), to_vector(back.input.values()), 1e-6, true);
  auto layers = layer_list(disc);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    run.check(loss, layers[li]->kernel.values(), to_vector(back.params[li].kernel.values()), 1e-6,
              true);
    run.check(loss, layers[li]->bias, back.params[li].bias, 1e-6, true);
  }
  return run.result();
}

}  // namespace detail

/// Finite-difference verification of every layer type, every loss and both
/// networks end to end, on seeded random 8x8 inputs.
inline std::vector<ComponentCheck> run_gradcheck_suite(const GradCheckOptions& opts = {}) {
  using detail::check_conv;
  std::vector<ComponentCheck> out;
  out.push_back(check_conv("conv9x9_same", 9, 1, Padding::Same, 8, opts));
  out.push_back(check_conv("conv9x9_valid", 9, 1, Padding::Valid, 10, opts));
  out.push_back(check_conv("conv5x5_same", 5, 1, Padding::Same, 8, opts));
  out.push_back(check_conv("conv5x5_valid", 5, 1, Padding::Valid, 8, opts));
  out.push_back(check_conv("conv1x1_same", 1, 1, Padding::Same, 8, opts));
  out.push_back(check_conv("conv1x1_valid", 1, 1, Padding::Valid, 8, opts));
  out.push_back(check_conv("conv4x4_stride2_same", 4, 2, Padding::Same, 8, opts));
  out.push_back(detail::check_activation("relu", Activation::relu(), opts));
  out.push_back(detail::check_activation("leaky_relu", Activation::leaky_relu(0.2), opts));
  out.push_back(detail::check_activation("sigmoid", Activation::sigmoid(), opts));
  out.push_back(detail::check_pair_loss("data_loss", data_loss, opts));
  out.push_back(detail::check_pair_loss(
      "tv_loss", [](const Tensor& x, const Tensor& y, const Tensor&, const Tensor&) {
        return tv_loss(x, y);
      },
      opts));
  out.push_back(detail::check_pair_loss("gd_loss", gd_loss, opts));
  out.push_back(detail::check_adversarial(opts));
  out.push_back(detail::check_generator(opts));
  out.push_back(detail::check_discriminator(opts));
  return out;
}

}  // namespace cdcgan

#endif  // CDCGAN_GRADCHECK_SUITE_HPP
