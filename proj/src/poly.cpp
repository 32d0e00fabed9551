#include "efg/poly.hpp"

#include <string>

namespace efg {

Degree parse_degree(std::string_view text) {
  if (text == "0") return Degree::Constant;
  if (text == "1") return Degree::Linear;
  if (text == "2") return Degree::Quadratic;
  if (text == "3") return Degree::Cubic;
  if (text == "cube") return Degree::Cube;
  throw ConfigError("unknown polynomial degree '" + std::string(text) + "'");
}

std::string to_string(Degree d) {
  switch (d) {
    case Degree::Constant: return "0";
    case Degree::Linear: return "1";
    case Degree::Quadratic: return "2";
    case Degree::Cubic: return "3";
    case Degree::Cube: return "cube";
  }
  return "?";
}

namespace {

void check_length(const PolyValue& f) {
  const auto expected = static_cast<std::size_t>(coeff_count(f.degree));
  if (f.coeffs.size() != expected) {
    throw ConfigError("degree " + to_string(f.degree) + " expects " + std::to_string(expected) +
                      " coefficients, got " + std::to_string(f.coeffs.size()));
  }
}

}  // namespace

double poly_eval(const Vec3& x, const PolyValue& f) {
  check_length(f);
  const auto c = [&](int k) { return f.coeffs[static_cast<std::size_t>(k)]; };
  return dispatch_degree(f.degree, [&](auto d) {
    return poly_detail::eval<decltype(d)::value>(x.x(), x.y(), x.z(), c);
  });
}

Vec3 poly_grad_x(const Vec3& x, const PolyValue& f) {
  check_length(f);
  const auto c = [&](int k) { return f.coeffs[static_cast<std::size_t>(k)]; };
  Vec3 g;
  dispatch_degree(f.degree, [&](auto d) {
    poly_detail::grad_x<decltype(d)::value>(x.x(), x.y(), x.z(), c, g.x(), g.y(), g.z());
  });
  return g;
}

void poly_basis(const Vec3& x, Degree degree, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(coeff_count(degree))) {
    throw ConfigError("basis output has the wrong length");
  }
  dispatch_degree(degree, [&](auto d) {
    poly_detail::basis<decltype(d)::value>(
        x.x(), x.y(), x.z(), [&](int k, double b) { out[static_cast<std::size_t>(k)] = b; });
  });
}

}  // namespace efg
