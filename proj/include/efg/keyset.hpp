#pragma once

#include "efg/param_grid.hpp"

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <vector>

namespace efg {

/// Flattened structure-of-arrays view of every RBF key in a grid (both banks
/// for Combined), padded to a multiple of kLanes. Padding keys sit far outside
/// the domain with zero coefficients, so their weights underflow to exactly 0.
struct KeySet {
  static constexpr std::size_t kLanes = 8;

  Degree degree = Degree::Constant;
  int ncoeff = 0;
  std::size_t count = 0;   // real keys
  std::size_t padded = 0;  // storage length of every array
  std::int64_t keys_per_bank = 0;

  std::vector<double> x, y, z;
  std::vector<double> beta;
  /// coeffs[k * padded + i] is coefficient k of key i.
  std::vector<double> coeffs;
  /// source[i] = bank * keys_per_bank + lattice key, or -1 for padding. Keys
  /// are stored in Morton order of their lattice index so that each tile
  /// covers a compact block and distant tiles can be skipped as a whole.
  std::vector<std::int64_t> source;
  /// Storage position of each first-bank lattice key; lets a query start its
  /// running maximum from the key of its nearest lattice point.
  int resolution = 0;
  std::vector<std::uint32_t> first_bank_slot;

  /// Storage position of the first-bank key at the lattice point nearest to (x, y, z).
  std::size_t nearest_slot(double x, double y, double z) const;

  /// Axis-aligned box and smallest scale of a run of keys. No key in the run
  /// has an exponent above max_exponent(q).
  struct Bounds {
    double lo[3];
    double hi[3];
    double beta_min;

    double max_exponent(double qx, double qy, double qz) const {
      const double q[3] = {qx, qy, qz};
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = std::max({lo[a] - q[a], 0.0, q[a] - hi[a]});
        d2 += d * d;
      }
      return -beta_min * d2;
    }
  };
  static constexpr std::size_t kTilesPerBlock = 8;
  /// Bounds of every tile of kLanes keys, and of every block of kTilesPerBlock tiles.
  std::vector<Bounds> tiles;
  std::vector<Bounds> blocks;

  double coeff(int k, std::size_t i) const {
    return coeffs[static_cast<std::size_t>(k) * padded + i];
  }
};

/// Throws ConfigError for the trilinear variant, which has no RBF keys.
KeySet make_keyset(const ParamGrid& grid);

}  // namespace efg
