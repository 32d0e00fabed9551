#pragma once

#include "efg/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efg {

/// Polynomial family attached to each key. Degrees 0..3 follow the truncated
/// Taylor expansion; `Cube` is the trilinear-coefficient form.
enum class Degree : std::uint8_t {
  Constant = 0,
  Linear = 1,
  Quadratic = 2,
  Cubic = 3,
  Cube = 4,
};

/// Number of coefficients for a degree: 1, 4, 10, 20, and 8 for `Cube`.
constexpr int coeff_count(Degree d) {
  switch (d) {
    case Degree::Constant: return 1;
    case Degree::Linear: return 4;
    case Degree::Quadratic: return 10;
    case Degree::Cubic: return 20;
    case Degree::Cube: return 8;
  }
  return 0;
}

/// Parses "0".."3" or "cube".
Degree parse_degree(std::string_view text);
std::string to_string(Degree d);

/// One value function f(x; phi).
///
/// Coefficient layout for degrees 0..3 (truncated at the degree):
///   [0]      constant
///   [1..3]   gradient (x, y, z)
///   [4..9]   symmetric Hessian H00 H01 H02 H11 H12 H22, contributing x^T H x / 2
///   [10..19] symmetric third-order tensor T_abc (a<=b<=c, lexicographic:
///            000 001 002 011 012 022 111 112 122 222), contributing
///            sum_abc T_abc x_a x_b x_c / 6 over all index orderings
/// For `Cube`: a0 + a1 x + a2 y + a3 z + a4 xy + a5 xz + a6 yz + a7 xyz.
struct PolyValue {
  Degree degree = Degree::Constant;
  std::vector<double> coeffs;
};

double poly_eval(const Vec3& x, const PolyValue& f);
Vec3 poly_grad_x(const Vec3& x, const PolyValue& f);

/// d f / d phi at x, i.e. the monomial basis weights. `out` must hold
/// coeff_count(degree) entries.
void poly_basis(const Vec3& x, Degree degree, std::span<double> out);

namespace poly_detail {

// Kernels shared by the public wrappers above and by the evaluation engine.
// `C` is any callable mapping a coefficient index to its value, so the same
// code serves packed coefficient arrays and strided SoA storage.

template <Degree D, class C>
inline double eval(double x, double y, double z, const C& c) {
  if constexpr (D == Degree::Cube) {
    return c(0) + c(1) * x + c(2) * y + c(3) * z + c(4) * x * y + c(5) * x * z + c(6) * y * z +
           c(7) * x * y * z;
  } else {
    double v = c(0);
    if constexpr (D >= Degree::Linear) {
      v += c(1) * x + c(2) * y + c(3) * z;
    }
    if constexpr (D >= Degree::Quadratic) {
      v += 0.5 * (c(4) * x * x + c(7) * y * y + c(9) * z * z) + c(5) * x * y + c(6) * x * z +
           c(8) * y * z;
    }
    if constexpr (D >= Degree::Cubic) {
      const double s6 = 1.0 / 6.0;
      v += s6 * (c(10) * x * x * x + c(16) * y * y * y + c(19) * z * z * z) +
           0.5 * (c(11) * x * x * y + c(12) * x * x * z + c(13) * x * y * y + c(15) * x * z * z +
                  c(17) * y * y * z + c(18) * y * z * z) +
           c(14) * x * y * z;
    }
    return v;
  }
}

template <Degree D, class C>
inline void grad_x(double x, double y, double z, const C& c, double& gx, double& gy, double& gz) {
  if constexpr (D == Degree::Cube) {
    gx = c(1) + c(4) * y + c(5) * z + c(7) * y * z;
    gy = c(2) + c(4) * x + c(6) * z + c(7) * x * z;
    gz = c(3) + c(5) * x + c(6) * y + c(7) * x * y;
  } else {
    gx = 0.0;
    gy = 0.0;
    gz = 0.0;
    if constexpr (D >= Degree::Linear) {
      gx = c(1);
      gy = c(2);
      gz = c(3);
    }
    if constexpr (D >= Degree::Quadratic) {
      gx += c(4) * x + c(5) * y + c(6) * z;
      gy += c(5) * x + c(7) * y + c(8) * z;
      gz += c(6) * x + c(8) * y + c(9) * z;
    }
    if constexpr (D >= Degree::Cubic) {
      gx += 0.5 * (c(10) * x * x + c(13) * y * y + c(15) * z * z) + c(11) * x * y +
            c(12) * x * z + c(14) * y * z;
      gy += 0.5 * (c(11) * x * x + c(16) * y * y + c(18) * z * z) + c(13) * x * y +
            c(14) * x * z + c(17) * y * z;
      gz += 0.5 * (c(12) * x * x + c(17) * y * y + c(19) * z * z) + c(14) * x * y +
            c(15) * x * z + c(18) * y * z;
    }
  }
}

/// Calls out(k, b_k) for every coefficient k with basis weight b_k = df/dc_k.
template <Degree D, class Out>
inline void basis(double x, double y, double z, const Out& out) {
  if constexpr (D == Degree::Cube) {
    out(0, 1.0);
    out(1, x);
    out(2, y);
    out(3, z);
    out(4, x * y);
    out(5, x * z);
    out(6, y * z);
    out(7, x * y * z);
  } else {
    out(0, 1.0);
    if constexpr (D >= Degree::Linear) {
      out(1, x);
      out(2, y);
      out(3, z);
    }
    if constexpr (D >= Degree::Quadratic) {
      out(4, 0.5 * x * x);
      out(5, x * y);
      out(6, x * z);
      out(7, 0.5 * y * y);
      out(8, y * z);
      out(9, 0.5 * z * z);
    }
    if constexpr (D >= Degree::Cubic) {
      const double s6 = 1.0 / 6.0;
      out(10, s6 * x * x * x);
      out(11, 0.5 * x * x * y);
      out(12, 0.5 * x * x * z);
      out(13, 0.5 * x * y * y);
      out(14, x * y * z);
      out(15, 0.5 * x * z * z);
      out(16, s6 * y * y * y);
      out(17, 0.5 * y * y * z);
      out(18, 0.5 * y * z * z);
      out(19, s6 * z * z * z);
    }
  }
}

}  // namespace poly_detail

/// Invokes fn(std::integral_constant<Degree, D>{}) for the runtime degree.
template <class Fn>
decltype(auto) dispatch_degree(Degree d, Fn&& fn) {
  switch (d) {
    case Degree::Constant: return fn(std::integral_constant<Degree, Degree::Constant>{});
    case Degree::Linear: return fn(std::integral_constant<Degree, Degree::Linear>{});
    case Degree::Quadratic: return fn(std::integral_constant<Degree, Degree::Quadratic>{});
    case Degree::Cubic: return fn(std::integral_constant<Degree, Degree::Cubic>{});
    case Degree::Cube: return fn(std::integral_constant<Degree, Degree::Cube>{});
  }
  throw ConfigError("unknown polynomial degree");
}

}  // namespace efg
