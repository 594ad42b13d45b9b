#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cdcgan/conv.hpp"
#include "cdcgan/gradcheck.hpp"
#include "cdcgan/parallel.hpp"

using namespace cdcgan;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(s);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Direct six-loop cross-correlation with explicit zero padding.
Tensor naive_conv(const Tensor& in, const Tensor& k, const std::vector<double>& bias,
                  std::size_t stride, bool same) {
  const long kh = static_cast<long>(k.shape().batch), kw = static_cast<long>(k.shape().height);
  const long cin = static_cast<long>(k.shape().width), cout = static_cast<long>(k.shape().channels);
  const long h = static_cast<long>(in.height()), w = static_cast<long>(in.width());
  const long s = static_cast<long>(stride);
  long oh, ow, pt = 0, pl = 0;
  if (same) {
    oh = (h + s - 1) / s;
    ow = (w + s - 1) / s;
    pt = std::max(0L, (oh - 1) * s + kh - h) / 2;
    pl = std::max(0L, (ow - 1) * s + kw - w) / 2;
  } else {
    oh = (h - kh) / s + 1;
    ow = (w - kw) / s + 1;
  }
  Tensor out({in.batch(), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
              static_cast<std::size_t>(cout)});
  for (std::size_t b = 0; b < in.batch(); ++b)
    for (long i = 0; i < oh; ++i)
      for (long j = 0; j < ow; ++j)
        for (long o = 0; o < cout; ++o) {
          double acc = bias[static_cast<std::size_t>(o)];
          for (long a = 0; a < kh; ++a)
            for (long c = 0; c < kw; ++c)
              for (long ci = 0; ci < cin; ++ci) {
                const long y = i * s + a - pt, x = j * s + c - pl;
                if (y < 0 || y >= h || x < 0 || x >= w) continue;
                acc += in(b, y, x, ci) * k[((a * kw + c) * cin + ci) * cout + o];
              }
          out(b, i, j, o) = acc;
        }
  return out;
}

}  // namespace

TEST(Conv, IdentityCase) {
  const Tensor in({1, 1, 1, 1}, 5.0), k({1, 1, 1, 1}, 1.0);
  const Tensor out = conv2d_forward(in, k, std::vector<double>{0.0}, 1, Padding::Valid);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(out[0], 5.0);
}

TEST(Conv, ConstantWindowSum) {
  const Tensor in({1, 3, 3, 1}, 1.0), k({2, 2, 1, 1}, 1.0);
  const Tensor out = conv2d_forward(in, k, std::vector<double>{0.0}, 1, Padding::Valid);
  EXPECT_EQ(out.shape(), (Shape{1, 2, 2, 1}));
  for (double v : out.values()) EXPECT_EQ(v, 4.0);
}

TEST(Conv, SameShapeForGeneratorKernel) {
  const Tensor in({1, 32, 32, 1}), k({9, 9, 1, 96});
  const Tensor out = conv2d_forward(in, k, std::vector<double>(96, 0.0), 1, Padding::Same);
  EXPECT_EQ(out.shape(), (Shape{1, 32, 32, 96}));
}

TEST(Conv, SamePreservesSizeForAllNetworkKernels) {
  for (std::size_t k : {1u, 5u, 9u}) {
    for (std::size_t n : {9u, 13u, 32u}) {
      const auto g = conv_geometry(n, n + 1, k, k, 1, Padding::Same);
      EXPECT_EQ(g.out_h, n);
      EXPECT_EQ(g.out_w, n + 1);
    }
  }
}

TEST(Conv, ValidAndStrideTwoGeometry) {
  EXPECT_EQ(conv_geometry(8, 8, 5, 5, 1, Padding::Valid).out_h, 4u);
  EXPECT_EQ(conv_geometry(32, 32, 4, 4, 2, Padding::Same).out_h, 16u);
  EXPECT_EQ(conv_geometry(17, 17, 4, 4, 2, Padding::Same).out_h, 9u);
  EXPECT_EQ(conv_geometry(10, 10, 3, 3, 2, Padding::Valid).out_w, 4u);
  EXPECT_THROW(conv_geometry(4, 4, 5, 5, 1, Padding::Valid), ShapeError);
}

TEST(Conv, ChannelMismatchThrows) {
  const Tensor in({1, 4, 4, 2}), k({3, 3, 1, 1});
  EXPECT_THROW(conv2d_forward(in, k, std::vector<double>{0.0}, 1, Padding::Same), ShapeError);
}

TEST(Conv, MatchesNaiveOracle) {
  std::mt19937_64 rng(11);
  struct Case { std::size_t k, s, h, w, cin, cout; bool same; };
  const Case cases[] = {{9, 1, 10, 12, 2, 3, true}, {5, 1, 7, 7, 3, 2, false},
                        {1, 1, 5, 6, 4, 3, true},   {4, 2, 9, 8, 3, 5, true},
                        {4, 2, 9, 9, 2, 2, false},  {3, 1, 6, 6, 2, 3, true}};
  for (const auto& c : cases) {
    const Tensor in = random_tensor({2, c.h, c.w, c.cin}, rng);
    const Tensor k = random_tensor({c.k, c.k, c.cin, c.cout}, rng);
    std::vector<double> bias(c.cout);
    for (double& b : bias) b = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Padding p = c.same ? Padding::Same : Padding::Valid;
    const Tensor got = conv2d_forward(in, k, bias, c.s, p);
    const Tensor want = naive_conv(in, k, bias, c.s, c.same);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv, LinearInInput) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({1, 7, 7, 2}, rng), b = random_tensor({1, 7, 7, 2}, rng);
  const Tensor k = random_tensor({5, 5, 2, 3}, rng);
  const std::vector<double> zero(3, 0.0);
  const double alpha = 0.7, beta = -1.3;
  Tensor mix(a.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * a[i] + beta * b[i];
  const Tensor fa = conv2d_forward(a, k, zero, 1, Padding::Same);
  const Tensor fb = conv2d_forward(b, k, zero, 1, Padding::Same);
  const Tensor fm = conv2d_forward(mix, k, zero, 1, Padding::Same);
  for (std::size_t i = 0; i < fm.size(); ++i) EXPECT_NEAR(fm[i], alpha * fa[i] + beta * fb[i], 1e-12);
}

TEST(Conv, ZeroUpstreamGivesZeroGrads) {
  std::mt19937_64 rng(4);
  const Tensor in = random_tensor({1, 6, 6, 2}, rng), k = random_tensor({3, 3, 2, 3}, rng);
  const ConvGrads g = conv2d_backward(in, k, Tensor({1, 6, 6, 3}), 1, Padding::Same);
  for (double v : g.input.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.kernel.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv, OneByOneKernelGradIsInputUpstreamProduct) {
  std::mt19937_64 rng(5);
  const Tensor in = random_tensor({1, 4, 4, 1}, rng), up = random_tensor({1, 4, 4, 2}, rng);
  const ConvGrads g = conv2d_backward(in, Tensor({1, 1, 1, 2}), up, 1, Padding::Valid);
  for (std::size_t o = 0; o < 2; ++o) {
    double want = 0.0;
    for (std::size_t p = 0; p < 16; ++p) want += in[p] * up[p * 2 + o];
    EXPECT_NEAR(g.kernel[o], want, 1e-12);
  }
}

TEST(Conv, BackwardMatchesFiniteDifferencesTightly) {
  std::mt19937_64 rng(6);
  Tensor in = random_tensor({1, 6, 6, 2}, rng), k = random_tensor({3, 3, 2, 3}, rng);
  std::vector<double> bias = {0.1, -0.2, 0.3};
  const Tensor probe = random_tensor({1, 6, 6, 3}, rng);
  auto loss = [&] {
    const Tensor out = conv2d_forward(in, k, bias, 1, Padding::Same);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
    return s;
  };
  const ConvGrads g = conv2d_backward(in, k, probe, 1, Padding::Same);
  EXPECT_LT(finite_diff_check(loss, in.values(), g.input.values(), 1000, 1e-5).max_relative_error, 1e-6);
  EXPECT_LT(finite_diff_check(loss, k.values(), g.kernel.values(), 1000, 1e-5).max_relative_error, 1e-6);
  EXPECT_LT(finite_diff_check(loss, bias, g.bias, 1000, 1e-5).max_relative_error, 1e-6);
}

TEST(Conv, SkippingInputGradLeavesItEmpty) {
  std::mt19937_64 rng(7);
  const Tensor in = random_tensor({1, 5, 5, 1}, rng), k = random_tensor({3, 3, 1, 2}, rng);
  const ConvGrads g = conv2d_backward(in, k, Tensor({1, 5, 5, 2}, 1.0), 1, Padding::Same, false);
  EXPECT_TRUE(g.input.empty());
  EXPECT_EQ(g.bias[0], 25.0);
}

TEST(Conv, ResultsIndependentOfThreadCount) {
  std::mt19937_64 rng(8);
  const Tensor in = random_tensor({2, 12, 12, 3}, rng), k = random_tensor({5, 5, 3, 4}, rng);
  const Tensor up = random_tensor({2, 6, 6, 4}, rng);
  const std::vector<double> bias(4, 0.25);
  set_thread_count(1);
  const Tensor f1 = conv2d_forward(in, k, bias, 2, Padding::Same);
  const ConvGrads g1 = conv2d_backward(in, k, up, 2, Padding::Same);
  set_thread_count(3);
  const Tensor f3 = conv2d_forward(in, k, bias, 2, Padding::Same);
  const ConvGrads g3 = conv2d_backward(in, k, up, 2, Padding::Same);
  set_thread_count(0);
  EXPECT_EQ(f1, f3);
  EXPECT_EQ(g1.input, g3.input);
  EXPECT_EQ(g1.kernel, g3.kernel);
  EXPECT_EQ(g1.bias, g3.bias);
}
