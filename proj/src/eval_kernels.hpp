#pragma once

// Per-query streaming kernels shared by the forward pass, the query gradient
// and the backward pass. Keys are processed in tiles of KeySet::kLanes with
// lane-wise accumulators; the running maximum of the exponent is updated once
// per tile and the accumulators are rescaled when it grows.

#include "efg/fast_exp.hpp"
#include "efg/keyset.hpp"
#include "efg/poly.hpp"

#include <algorithm>
#include <limits>

namespace efg::detail {

inline constexpr std::size_t kLanes = KeySet::kLanes;

/// Tiles whose largest exponent is this far below the running maximum are
/// skipped, first by their bounding boxes and then by the exact exponents. Each skipped weight is below e^-64 ~ 1.6e-28 of the largest one,
/// so even 2^21 of them move the denominator by less than 1e-21 relative.
inline constexpr double kNegligibleExponent = -64.0;

struct ForwardState {
  double output = 0.0;
  double shift = 0.0;
  double denominator = 0.0;
};

template <Degree D, bool WithGradient>
inline ForwardState stream_query(const KeySet& ks, double qx, double qy, double qz,
                                 double* gradient = nullptr) noexcept {
  const double* __restrict kx = ks.x.data();
  const double* __restrict ky = ks.y.data();
  const double* __restrict kz = ks.z.data();
  const double* __restrict kb = ks.beta.data();
  const double* __restrict kc = ks.coeffs.data();
  const std::size_t stride = ks.padded;

  // Any key's exponent is a lower bound on the maximum; starting from the
  // nearest lattice key lets distant tiles be skipped from the outset.
  double running_max;
  {
    const std::size_t p = ks.nearest_slot(qx, qy, qz);
    const double px = qx - kx[p], py = qy - ky[p], pz = qz - kz[p];
    running_max = -kb[p] * (px * px + py * py + pz * pz);
    if (!(running_max > -std::numeric_limits<double>::infinity())) {
      running_max = -std::numeric_limits<double>::infinity();
    }
  }
  double den[kLanes] = {};
  double num[kLanes] = {};
  // Gradient accumulators: sum w df/dx, sum w beta d, sum w beta d f.
  double ga[3][kLanes] = {};
  double gb[3][kLanes] = {};
  double gc[3][kLanes] = {};

  constexpr std::size_t kBlock = kLanes * KeySet::kTilesPerBlock;
  for (std::size_t base = 0; base < stride; base += kLanes) {
    if (base % kBlock == 0 &&
        ks.blocks[base / kBlock].max_exponent(qx, qy, qz) - running_max < kNegligibleExponent) {
      base += kBlock - kLanes;
      continue;
    }
    if (ks.tiles[base / kLanes].max_exponent(qx, qy, qz) - running_max < kNegligibleExponent) continue;
    double dx[kLanes], dy[kLanes], dz[kLanes], a[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      dx[l] = qx - kx[i];
      dy[l] = qy - ky[i];
      dz[l] = qz - kz[i];
      a[l] = -kb[i] * (dx[l] * dx[l] + dy[l] * dy[l] + dz[l] * dz[l]);
    }
    double tile_max = a[0];
    for (std::size_t l = 1; l < kLanes; ++l) tile_max = std::max(tile_max, a[l]);
    if (tile_max > running_max) {
      const double rescale = exp_kernel(running_max - tile_max);
      for (std::size_t l = 0; l < kLanes; ++l) {
        den[l] *= rescale;
        num[l] *= rescale;
        if constexpr (WithGradient) {
          for (int c = 0; c < 3; ++c) {
            ga[c][l] *= rescale;
            gb[c][l] *= rescale;
            gc[c][l] *= rescale;
          }
        }
      }
      running_max = tile_max;
    } else if (tile_max - running_max < kNegligibleExponent) {
      continue;
    }
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      const auto c = [&](int k) { return kc[static_cast<std::size_t>(k) * stride + i]; };
      const double w = exp_kernel(a[l] - running_max);
      const double f = poly_detail::eval<D>(dx[l], dy[l], dz[l], c);
      den[l] += w;
      num[l] += w * f;
      if constexpr (WithGradient) {
        double fx, fy, fz;
        poly_detail::grad_x<D>(dx[l], dy[l], dz[l], c, fx, fy, fz);
        ga[0][l] += w * fx;
        ga[1][l] += w * fy;
        ga[2][l] += w * fz;
        const double wb = w * kb[i];
        gb[0][l] += wb * dx[l];
        gb[1][l] += wb * dy[l];
        gb[2][l] += wb * dz[l];
        gc[0][l] += wb * dx[l] * f;
        gc[1][l] += wb * dy[l] * f;
        gc[2][l] += wb * dz[l] * f;
      }
    }
  }

  double den_sum = 0.0;
  double num_sum = 0.0;
  for (std::size_t l = 0; l < kLanes; ++l) {
    den_sum += den[l];
    num_sum += num[l];
  }
  ForwardState state;
  state.output = num_sum / den_sum;
  state.shift = running_max;
  state.denominator = den_sum;
  if constexpr (WithGradient) {
    for (int c = 0; c < 3; ++c) {
      double sa = 0.0, sb = 0.0, sc = 0.0;
      for (std::size_t l = 0; l < kLanes; ++l) {
        sa += ga[c][l];
        sb += gb[c][l];
        sc += gc[c][l];
      }
      gradient[c] = (sa + 2.0 * state.output * sb - 2.0 * sc) / den_sum;
    }
  }
  return state;
}

}  // namespace efg::detail
