#pragma once

#include "efg/param_grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace efg::testing {

/// Grid with every stored channel randomized: coefficients in [-1,1],
/// log-scales in [log_lo, log_hi], offsets in [-offset, offset].
inline ParamGrid random_grid(const GridConfig& config, std::mt19937_64& rng, double log_lo = 0.0,
                             double log_hi = 3.0, double offset = 0.2) {
  ParamGrid g(config);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> ls(log_lo, log_hi);
  std::uniform_real_distribution<double> off(-offset, offset);
  for (std::int64_t k = 0; k < g.key_count(); ++k) {
    for (int c = 0; c < g.channels(); ++c) {
      switch (g.layout().role(c)) {
        case ChannelRole::Coefficient: g.at(k, c) = coef(rng); break;
        case ChannelRole::LogScale: g.at(k, c) = ls(rng); break;
        case ChannelRole::Offset: g.at(k, c) = off(rng); break;
      }
    }
  }
  return g;
}

inline std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> p(n);
  for (auto& v : p) {
    const double x = u(rng), y = u(rng), z = u(rng);
    v = Vec3(x, y, z);
  }
  return p;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace efg::testing
