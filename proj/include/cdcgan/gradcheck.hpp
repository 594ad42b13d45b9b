#ifndef CDCGAN_GRADCHECK_HPP
#define CDCGAN_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cdcgan {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;  ///< probes dropped because they straddle a kink
};

/// Absolute floor on the relative-error denominator so coordinates whose true
/// gradient is zero compare against rounding noise rather than 0/0.
inline constexpr double kGradCheckFloor = 1e-5;

/// With `skip_kinks`, a probe whose forward and backward one-sided slopes
/// differ by more than this (relative, with an absolute floor for rounding
/// noise) is treated as crossing a ReLU or L1 kink and is not scored.
inline constexpr double kKinkTolerance = 1e-5;
inline constexpr double kKinkFloor = 1e-9;

/// Compares analytic gradients with central differences at `probe_count`
/// seeded random coordinates of `params` (all of them if probe_count >= size).
///
/// `loss` must re-evaluate the scalar objective from the current contents of
/// `params`; each probed coordinate is restored exactly afterwards.
inline GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                         std::span<double> params,
                                         std::span<const double> analytic,
                                         std::size_t probe_count, double eps,
                                         std::uint64_t seed = 0, bool skip_kinks = false) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("finite_diff_check: gradient and parameter sizes differ");
  }
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  GradCheckResult result;
  if (params.empty()) return result;

  std::vector<std::size_t> coords;
  if (probe_count >= params.size()) {
    coords.resize(params.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    coords.resize(probe_count);
    for (auto& c : coords) c = pick(rng);
  }

  for (std::size_t i : coords) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss();
    params[i] = saved - eps;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    if (skip_kinks) {
      const double centre = loss();
      const double fwd = (up - centre) / eps, bwd = (centre - down) / eps;
      if (std::abs(fwd - bwd) > std::max(kKinkTolerance * std::max(std::abs(fwd), std::abs(bwd)), kKinkFloor)) {
        ++result.skipped;
        continue;
      }
    }
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), kGradCheckFloor});
    const double rel = std::abs(numeric - analytic[i]) / denom;
    ++result.probes;
    if (rel > result.max_relative_error || !std::isfinite(rel)) {
      result.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
  }
  return result;
}

}  // namespace cdcgan

#endif  // CDCGAN_GRADCHECK_HPP
