#include <gtest/gtest.h>

#include <array>
#include <random>

#include "cdcgan/network.hpp"

using namespace cdcgan;

namespace {

Tensor random_plane(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor t({1, h, w, 1});
  for (double& v : t.values()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  return t;
}

struct Dims {
  std::size_t kh, kw, cin, cout;
};

}  // namespace

TEST(Network, GeneratorLayerShapes) {
  const Generator g = build_generator(0);
  const std::array<std::array<Dims, 3>, 5> want = {{
      {{{9, 9, 1, 96}, {1, 1, 96, 48}, {5, 5, 48, 1}}},
      {{{9, 9, 1, 96}, {1, 1, 96, 48}, {5, 5, 48, 1}}},
      {{{9, 9, 2, 64}, {1, 1, 64, 32}, {5, 5, 32, 2}}},
      {{{9, 9, 3, 96}, {1, 1, 96, 48}, {5, 5, 48, 1}}},
      {{{9, 9, 2, 96}, {1, 1, 96, 48}, {5, 5, 48, 1}}},
  }};
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t l = 0; l < 3; ++l) {
      const ConvLayer& layer = g.subnets[s][l];
      EXPECT_EQ(layer.kh(), want[s][l].kh) << subnet_name(s) << l;
      EXPECT_EQ(layer.kw(), want[s][l].kw);
      EXPECT_EQ(layer.in_channels(), want[s][l].cin) << subnet_name(s) << l;
      EXPECT_EQ(layer.out_channels(), want[s][l].cout);
      EXPECT_EQ(layer.bias.size(), want[s][l].cout);
      EXPECT_EQ(layer.padding, Padding::Same);
      EXPECT_EQ(layer.stride, 1u);
      EXPECT_EQ(layer.activation.kind, l == 2 ? ActivationKind::Identity : ActivationKind::ReLU);
    }
  }
}

TEST(Network, ParameterCounts) {
  const Generator g = build_generator(0);
  EXPECT_EQ(count_parameters(g.subnets[S1]), 13729u);
  EXPECT_EQ(count_parameters(g.subnets[S2]), 13729u);
  EXPECT_EQ(count_parameters(g.subnets[S3]), 14114u);
  EXPECT_EQ(count_parameters(g.subnets[S4]), 29281u);
  EXPECT_EQ(count_parameters(g.subnets[S5]), 21505u);
  // Sum of kh*kw*cin*cout + cout over the fifteen layers.
  EXPECT_EQ(count_parameters(g), 92358u);
  // 4*4*3*64+64 + 4*4*64*64+64 + 5*5*64*1+1.
  EXPECT_EQ(count_parameters(build_discriminator(0)), 3136u + 65600u + 1601u);
  EXPECT_EQ(count_parameters(std::span<const ConvLayer>{}), 0u);
}

TEST(Network, InitIsDeterministicAndFanInScaled) {
  const Generator a = build_generator(42), b = build_generator(42), c = build_generator(43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const ConvLayer& wide = a.subnets[S4][0];
  double sum = 0.0, sq = 0.0;
  for (double v : wide.kernel.values()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(wide.kernel.size());
  const double std_dev = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(std_dev, std::sqrt(2.0 / (9 * 9 * 3)), 0.01);
  for (const ConvLayer* l : layer_list(a)) {
    for (double v : l->bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(Network, GeneratorPreservesSpatialShape) {
  const Generator g = build_generator(1);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{32, 32}, {9, 9}, {13, 20}}) {
    const auto out = generator_forward(g, random_plane(h, w, 1), random_plane(h, w, 2));
    EXPECT_EQ(out.x.shape(), (Shape{1, h, w, 1}));
    EXPECT_EQ(out.y.shape(), (Shape{1, h, w, 1}));
    EXPECT_EQ(out.taps[S3].channels(), 2u);
  }
}

TEST(Network, ZeroGeneratorOutputsZero) {
  const auto out = generator_forward(zero_generator(), random_plane(16, 16, 1), random_plane(16, 16, 2));
  for (double v : out.x.values()) EXPECT_EQ(v, 0.0);
  for (double v : out.y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Network, GeneratorRejectsMismatchedInputs) {
  const Generator g = zero_generator();
  EXPECT_THROW(generator_forward(g, random_plane(8, 8, 1), random_plane(8, 9, 1)), ShapeError);
}

TEST(Network, ConnectivityByPerturbation) {
  const Generator base = build_generator(5);
  const Tensor c = random_plane(12, 12, 3), d = random_plane(12, 12, 4);
  const auto ref = generator_forward(base, c, d);
  auto effect = [&](Subnet s) {
    Generator g = base;
    for (double& v : g.subnets[s][0].kernel.values()) v += 0.05;
    for (double& v : g.subnets[s][2].bias) v += 0.1;
    const auto out = generator_forward(g, c, d);
    return std::pair{out.x != ref.x, out.y != ref.y};
  };
  EXPECT_EQ(effect(S1), (std::pair{true, true}));
  EXPECT_EQ(effect(S2), (std::pair{true, true}));
  EXPECT_EQ(effect(S3), (std::pair{true, true}));
  EXPECT_EQ(effect(S4), (std::pair{true, false}));
  EXPECT_EQ(effect(S5), (std::pair{false, true}));
}

TEST(Network, ConnectivityByBackward) {
  const Generator g = build_generator(6);
  const Tensor c = random_plane(10, 10, 1), d = random_plane(10, 10, 2);
  GeneratorTape tape;
  const auto out = generator_forward(g, c, d, &tape);
  const Tensor ones(out.x.shape(), 1.0);
  auto all_zero = [](const LayerGrad& lg) {
    for (double v : lg.kernel.values()) if (v != 0.0) return false;
    for (double v : lg.bias) if (v != 0.0) return false;
    return true;
  };
  const auto only_y = generator_backward(g, tape, Tensor{}, ones);
  for (std::size_t l = 0; l < 3; ++l) EXPECT_TRUE(all_zero(only_y[3 * S4 + l]));
  EXPECT_FALSE(all_zero(only_y[3 * S5 + 2]));
  const auto only_x = generator_backward(g, tape, ones, Tensor{});
  for (std::size_t l = 0; l < 3; ++l) EXPECT_TRUE(all_zero(only_x[3 * S5 + l]));
  EXPECT_FALSE(all_zero(only_x[3 * S4 + 2]));
}

TEST(Network, DiscriminatorShapesAndRange) {
  const Discriminator d = build_discriminator(0);
  EXPECT_EQ(d.layers[0].stride, 2u);
  EXPECT_EQ(d.layers[2].padding, Padding::Valid);
  EXPECT_EQ(d.layers[0].activation.kind, ActivationKind::LeakyReLU);
  EXPECT_EQ(d.layers[2].activation.kind, ActivationKind::Sigmoid);
  std::mt19937_64 rng(1);
  Tensor img({2, 32, 32, 3});
  for (double& v : img.values()) v = std::uniform_real_distribution<double>(-50, 50)(rng);
  const Tensor map = discriminator_forward(d, img);
  EXPECT_EQ(map.shape(), (Shape{2, 4, 4, 1}));
  for (double v : map.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(discriminator_forward(d, Tensor({1, 64, 64, 3})).shape(), (Shape{1, 12, 12, 1}));
  EXPECT_THROW(discriminator_forward(d, Tensor({1, 32, 32, 1})), ShapeError);
}

TEST(Network, ZeroDiscriminatorIsHalf) {
  const Tensor map = discriminator_forward(zero_discriminator(), Tensor({1, 32, 32, 3}, 0.7));
  for (double v : map.values()) EXPECT_EQ(v, 0.5);
}

TEST(Network, MapMeansAndBackward) {
  Tensor map({2, 2, 2, 1}, std::vector<double>{1, 2, 3, 4, 0.5, 0.5, 0.5, 0.5});
  const auto m = map_means(map);
  EXPECT_DOUBLE_EQ(m[0], 2.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
  const std::vector<double> g = {4.0, -8.0};
  const Tensor back = map_means_backward(map.shape(), g);
  EXPECT_DOUBLE_EQ(back[0], 1.0);
  EXPECT_DOUBLE_EQ(back[7], -2.0);
}

TEST(Network, LayerNames) {
  const Generator g = zero_generator();
  EXPECT_EQ(layer_name(g, 0), "S1.conv0");
  EXPECT_EQ(layer_name(g, 14), "S5.conv2");
  EXPECT_EQ(layer_name(zero_discriminator(), 2), "D.conv2");
}
