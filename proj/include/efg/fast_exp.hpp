#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace efg::detail {

/// Arguments below this underflow to zero in both exp() and exp_kernel().
inline constexpr double kExpUnderflow = -600.0;

/// exp(x) for x <= 0 written with plain arithmetic and bit casts so loops
/// over it vectorize. Cody-Waite reduction to |r| <= ln2/2 followed by a
/// degree-13 Taylor polynomial; relative error is within a few ulp.
/// Returns exactly 1 at x == 0 and exactly 0 below kExpUnderflow.
inline double exp_kernel(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShifter = 0x1.8p52;
  const double xc = std::max(x, kExpUnderflow);
  double kd = std::fma(xc, kLog2e, kShifter);
  const std::int64_t n = std::bit_cast<std::int64_t>(kd) - std::bit_cast<std::int64_t>(kShifter);
  kd -= kShifter;
  double r = std::fma(-kd, kLn2Hi, xc);
  r = std::fma(-kd, kLn2Lo, r);
  double p = 1.0 / 6227020800.0;  // 1/13!
  p = std::fma(p, r, 1.0 / 479001600.0);
  p = std::fma(p, r, 1.0 / 39916800.0);
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  // Zeroing the exponent bits gives exactly 0 below the cutoff without a branch.
  const std::int64_t keep = -static_cast<std::int64_t>(x >= kExpUnderflow);
  const double scale = std::bit_cast<double>(((n + 1023) << 52) & keep);
  return p * scale;
}

}  // namespace efg::detail
