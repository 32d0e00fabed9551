#include "efg/keyset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace efg {

namespace {

std::uint64_t spread_bits(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int b = 0; b < 21; ++b) r |= ((v >> b) & 1u) << (3 * b);
  return r;
}

/// Lattice keys sorted by Morton code.
std::vector<std::int64_t> morton_order(int resolution) {
  const std::int64_t r = resolution;
  std::vector<std::int64_t> order(static_cast<std::size_t>(r * r * r));
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> code(order.size());
  for (std::int64_t key = 0; key < r * r * r; ++key) {
    const auto ix = static_cast<std::uint64_t>(key % r);
    const auto iy = static_cast<std::uint64_t>((key / r) % r);
    const auto iz = static_cast<std::uint64_t>(key / (r * r));
    code[static_cast<std::size_t>(key)] =
        spread_bits(ix) | (spread_bits(iy) << 1) | (spread_bits(iz) << 2);
  }
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return code[static_cast<std::size_t>(a)] < code[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace

std::size_t KeySet::nearest_slot(double x, double y, double z) const {
  if (resolution == 1) return first_bank_slot[0];
  const double half = 0.5 * (resolution - 1);
  auto cell = [&](double c) {
    const double t = std::nearbyint((c + 1.0) * half);
    return static_cast<std::int64_t>(std::clamp(t, 0.0, static_cast<double>(resolution - 1)));
  };
  const std::int64_t r = resolution;
  return first_bank_slot[static_cast<std::size_t>(cell(x) + r * (cell(y) + r * cell(z)))];
}

KeySet make_keyset(const ParamGrid& grid) {
  if (grid.variant() == Variant::Trilinear) {
    throw ConfigError("trilinear grids have no RBF keys");
  }
  const auto banks = grid.layout().banks();
  KeySet ks;
  ks.degree = grid.degree();
  ks.ncoeff = coeff_count(grid.degree());
  ks.keys_per_bank = grid.key_count();
  ks.count = static_cast<std::size_t>(grid.key_count()) * banks.size();
  if (ks.count == 0) throw ConfigError("grid has no keys");
  ks.padded = (ks.count + KeySet::kLanes - 1) / KeySet::kLanes * KeySet::kLanes;

  // Padding keys: far away with unit scale, so -beta*d^2 is hugely negative.
  constexpr double kFar = 1e30;
  ks.x.assign(ks.padded, kFar);
  ks.y.assign(ks.padded, kFar);
  ks.z.assign(ks.padded, kFar);
  ks.beta.assign(ks.padded, 1.0);
  ks.coeffs.assign(ks.padded * static_cast<std::size_t>(ks.ncoeff), 0.0);
  ks.source.assign(ks.padded, -1);

  const std::vector<std::int64_t> order = morton_order(grid.resolution());
  ks.resolution = grid.resolution();
  ks.first_bank_slot.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    ks.first_bank_slot[static_cast<std::size_t>(order[k])] = static_cast<std::uint32_t>(k);
  }
  std::size_t i = 0;
  for (std::size_t b = 0; b < banks.size(); ++b) {
    const BankLayout& bank = banks[b];
    for (const std::int64_t key : order) {
      ks.source[i] = static_cast<std::int64_t>(b) * ks.keys_per_bank + key;
      const Vec3 p = grid.key_position(static_cast<int>(b), key);
      ks.x[i] = p.x();
      ks.y[i] = p.y();
      ks.z[i] = p.z();
      ks.beta[i] = grid.scale(static_cast<int>(b), key);
      for (int k = 0; k < ks.ncoeff; ++k) {
        ks.coeffs[static_cast<std::size_t>(k) * ks.padded + i] = grid.at(key, bank.coeff + k);
      }
      ++i;
    }
  }

  auto bound = [&](std::size_t first, std::size_t last) {
    KeySet::Bounds b{{ks.x[first], ks.y[first], ks.z[first]},
                     {ks.x[first], ks.y[first], ks.z[first]},
                     ks.beta[first]};
    for (std::size_t k = first; k < last; ++k) {
      const double p[3] = {ks.x[k], ks.y[k], ks.z[k]};
      for (int a = 0; a < 3; ++a) {
        b.lo[a] = std::min(b.lo[a], p[a]);
        b.hi[a] = std::max(b.hi[a], p[a]);
      }
      b.beta_min = std::min(b.beta_min, ks.beta[k]);
    }
    return b;
  };
  constexpr std::size_t kBlockKeys = KeySet::kLanes * KeySet::kTilesPerBlock;
  ks.tiles.reserve(ks.padded / KeySet::kLanes);
  ks.blocks.reserve((ks.padded + kBlockKeys - 1) / kBlockKeys);
  for (std::size_t k = 0; k < ks.padded; k += KeySet::kLanes) ks.tiles.push_back(bound(k, k + KeySet::kLanes));
  for (std::size_t k = 0; k < ks.padded; k += kBlockKeys) {
    ks.blocks.push_back(bound(k, std::min(k + kBlockKeys, ks.padded)));
  }
  return ks;
}

}  // namespace efg
