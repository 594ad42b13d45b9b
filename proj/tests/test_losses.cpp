#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cdcgan/losses.hpp"
#include "loss_oracles.hpp"

using namespace cdcgan;
using namespace cdcgan::oracle;

TEST(Losses, MatchScalarOraclesOnRandomCases) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Grid x = random_grid(5, 5, rng), y = random_grid(5, 5, rng);
    const Grid c = random_grid(5, 5, rng), d = random_grid(5, 5, rng);
    const Tensor tx = grid_tensor(x), ty = grid_tensor(y), tc = grid_tensor(c), td = grid_tensor(d);
    EXPECT_NEAR(data_loss(tx, ty, tc, td).value, oracle_data(x, y, c, d), 1e-12);
    EXPECT_NEAR(tv_loss(tx, ty).value, oracle_tv(x, y), 1e-12);
    EXPECT_NEAR(gd_loss(tx, ty, tc, td).value, oracle_gd(x, y, c, d), 1e-12);
  }
}

TEST(Losses, ZeroCasesAreExact) {
  std::mt19937_64 rng(7);
  const Tensor a = grid_tensor(random_grid(5, 5, rng)), b = grid_tensor(random_grid(5, 5, rng));
  EXPECT_EQ(data_loss(a, b, a, b).value, 0.0);
  EXPECT_EQ(gd_loss(a, b, a, b).value, 0.0);
  EXPECT_EQ(tv_loss(Tensor({1, 5, 5, 1}, 0.3), Tensor({1, 5, 5, 1}, -2.0)).value, 0.0);
  // Uniform shifts keep every neighbour difference; 0.5 and 0.25 are exact in binary.
  Tensor shifted = a;
  for (double& v : shifted.values()) v += 0.5;
  Tensor shifted_b = b;
  for (double& v : shifted_b.values()) v -= 0.25;
  Tensor qa = a, qb = b;
  for (Tensor* t : {&qa, &qb, &shifted, &shifted_b}) {
    for (double& v : t->values()) v = std::round(v * 1024.0) / 1024.0;
  }
  EXPECT_EQ(gd_loss(shifted, shifted_b, qa, qb).value, 0.0);
}

TEST(Losses, SpecExamples) {
  const Tensor z({1, 4, 4, 1}, 0.0), one({1, 4, 4, 1}, 1.0);
  EXPECT_DOUBLE_EQ(data_loss(one, z, z, z).value, 1.0);
  Tensor ramp({1, 4, 4, 1});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) ramp(0, i, j, 0) = static_cast<double>(j);
  EXPECT_DOUBLE_EQ(tv_loss(ramp, z).value, 0.75);
}

TEST(Losses, GdIsShiftInvariantInX) {
  std::mt19937_64 rng(8);
  const Tensor x = grid_tensor(random_grid(6, 6, rng)), c = grid_tensor(random_grid(6, 6, rng));
  Tensor shifted = x;
  for (double& v : shifted.values()) v += 3.0;
  EXPECT_NEAR(gd_loss(shifted, x, c, x).value, gd_loss(x, x, c, x).value, 1e-12);
}

TEST(Losses, TransposeSymmetry) {
  std::mt19937_64 rng(9);
  const Grid x = random_grid(4, 6, rng), y = random_grid(4, 6, rng);
  const Grid c = random_grid(4, 6, rng), d = random_grid(4, 6, rng);
  auto transpose = [](const Grid& g) {
    Grid t(g[0].size(), std::vector<double>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g[0].size(); ++j) t[j][i] = g[i][j];
    return t;
  };
  const Tensor tx = grid_tensor(x), ty = grid_tensor(y), tc = grid_tensor(c), td = grid_tensor(d);
  const Tensor ux = grid_tensor(transpose(x)), uy = grid_tensor(transpose(y));
  const Tensor uc = grid_tensor(transpose(c)), ud = grid_tensor(transpose(d));
  EXPECT_NEAR(tv_loss(tx, ty).value, tv_loss(ux, uy).value, 1e-12);
  EXPECT_NEAR(gd_loss(tx, ty, tc, td).value, gd_loss(ux, uy, uc, ud).value, 1e-12);
}

TEST(Losses, SubgradientAtZeroIsZero) {
  const Tensor a({1, 3, 3, 1}, 0.5);
  const PairLoss l = data_loss(a, a, a, a);
  for (double g : l.grad_x.values()) EXPECT_EQ(g, 0.0);
  const PairLoss t = tv_loss(a, a);
  for (double g : t.grad_y.values()) EXPECT_EQ(g, 0.0);
}

TEST(Losses, BatchAveraging) {
  std::mt19937_64 rng(10);
  const Grid x0 = random_grid(5, 5, rng), x1 = random_grid(5, 5, rng), c = random_grid(5, 5, rng);
  const Tensor single0 = grid_tensor(x0), single1 = grid_tensor(x1), tc = grid_tensor(c);
  Tensor batch({2, 5, 5, 1}), batch_c({2, 5, 5, 1});
  for (std::size_t i = 0; i < 25; ++i) {
    batch[i] = single0[i];
    batch[25 + i] = single1[i];
    batch_c[i] = batch_c[25 + i] = tc[i];
  }
  const double mean = 0.5 * (data_loss(single0, tc, tc, tc).value + data_loss(single1, tc, tc, tc).value);
  EXPECT_NEAR(data_loss(batch, batch_c, batch_c, batch_c).value, mean, 1e-12);
}

TEST(Losses, ShapeMismatchThrows) {
  const Tensor a({1, 4, 4, 1}), b({1, 4, 5, 1});
  EXPECT_THROW(data_loss(a, a, a, b), ShapeError);
  EXPECT_THROW(tv_loss(a, b), ShapeError);
  EXPECT_THROW(gd_loss(a, b, a, b), ShapeError);
}

TEST(Adversarial, AnalyticValues) {
  const auto half = adversarial_losses(0.5, 0.5);
  EXPECT_NEAR(half.adv_d, 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(half.adv_g, std::log(2.0), 1e-15);
  const auto optimal = adversarial_losses(1.0 - 1e-12, 1e-12);
  EXPECT_LT(optimal.adv_d, 1e-6);
  EXPECT_TRUE(std::isfinite(adversarial_losses(0.0, 1.0).adv_d));
}

TEST(Adversarial, GradientSigns) {
  const auto a = adversarial_losses(0.3, 0.6);
  EXPECT_LT(a.d_adv_d_d_real[0], 0.0);
  EXPECT_GT(a.d_adv_d_d_fake[0], 0.0);
  EXPECT_LT(a.d_adv_g_d_fake[0], 0.0);
}

TEST(Adversarial, ClampedProbabilitiesHaveZeroGradient) {
  const auto a = adversarial_losses(0.0, 1.0);
  EXPECT_EQ(a.d_adv_d_d_real[0], 0.0);
  EXPECT_EQ(a.d_adv_d_d_fake[0], 0.0);
  EXPECT_EQ(a.d_adv_g_d_fake[0], 0.0);
}

TEST(TotalObjective, Arithmetic) {
  EXPECT_NEAR(total_generator_objective(0.002, 0.6931, 1.0, 0.5, 0.25), 1.7513862, 1e-12);
  EXPECT_EQ(total_generator_objective(0.0, 5.0, 1.0, 0.5, 0.25), 1.75);
  EXPECT_THROW(total_generator_objective(-0.1, 0.0, 0.0, 0.0, 0.0), std::invalid_argument);
}
