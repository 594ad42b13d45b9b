#include <gtest/gtest.h>

#include <chrono>
#include <vector>

#include "cdcgan/gradcheck.hpp"
#include "cdcgan/gradcheck_suite.hpp"

using namespace cdcgan;

TEST(FiniteDiff, LinearFunctionIsExact) {
  std::vector<double> p = {0.3, -1.2, 2.5, 0.0};
  const std::vector<double> w = {1.5, -0.25, 3.0, 7.0};
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
    return s;
  };
  const auto r = finite_diff_check(loss, p, w, 10, 1e-3);
  EXPECT_LT(r.max_relative_error, 1e-10);
  EXPECT_EQ(r.probes, 4u);
  EXPECT_EQ(p[1], -1.2);
}

TEST(FiniteDiff, CorruptedGradientIsDetected) {
  std::vector<double> p = {0.5, 1.5};
  auto loss = [&] { return p[0] * p[0] + p[1] * p[1] * p[1]; };
  const std::vector<double> wrong = {2 * 0.5 * 1.5, 3 * 1.5 * 1.5};
  EXPECT_GT(finite_diff_check(loss, p, wrong, 2, 1e-5).max_relative_error, 1e-2);
}

TEST(FiniteDiff, RejectsBadEpsilon) {
  std::vector<double> p = {1.0};
  const std::vector<double> g = {0.0};
  EXPECT_THROW(finite_diff_check([] { return 0.0; }, p, g, 1, 1e-2), std::invalid_argument);
  EXPECT_THROW(finite_diff_check([] { return 0.0; }, p, g, 1, 1e-9), std::invalid_argument);
}

TEST(GradCheckSuite, AllComponentsPass) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_gradcheck_suite();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(results.size(), 9u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed()) << r.name << " " << r.max_relative_error;
    EXPECT_GT(r.probes, 0u) << r.name;
  }
  EXPECT_LT(seconds, 120.0);
}

TEST(GradCheckSuite, MutationIsCaught) {
  GradCheckOptions opts;
  opts.mutate = "gd_loss";
  for (const auto& r : run_gradcheck_suite(opts)) {
    if (r.name == "gd_loss") {
      EXPECT_FALSE(r.passed());
      EXPECT_GT(r.max_relative_error, 1e-2);
    } else {
      EXPECT_TRUE(r.passed()) << r.name;
    }
  }
}
