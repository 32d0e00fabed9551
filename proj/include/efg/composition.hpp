#pragma once

#include "efg/eval.hpp"
#include "efg/param_grid.hpp"
#include "efg/sdf.hpp"
#include "efg/trainer.hpp"

#include <span>
#include <vector>

namespace efg {

/// Cosine series S(q) = sum_b w_b(q) O_b(q), b = 0..B, with the separable
/// weight w_b(q) = cos(b pi x) cos(b pi y) cos(b pi z).
struct CosineStack {
  std::vector<ParamGrid> bands;

  int band_count() const { return static_cast<int>(bands.size()); }
  /// Stored parameters over all B+1 bands.
  std::int64_t param_count() const;
  /// Throws ConfigError when empty or when the bands differ in shape.
  void validate() const;
};

double cosine_weight(int band, const Vec3& q);

std::vector<double> cosine_eval(const CosineStack& stack, std::span<const Vec3> queries,
                                const EvalOptions& options = {});

/// partial[b][j] = sum_{b' <= b} w_b'(q_j) O_b'(q_j); the last row equals cosine_eval.
std::vector<std::vector<double>> cosine_partial_sums(const CosineStack& stack, std::span<const Vec3> queries,
                                                     const EvalOptions& options = {});

struct CosineFitResult {
  CosineStack stack;
  std::vector<LossRecord> history;
};

/// Trains all B+1 bands jointly on the fit loop's batches. Band 0 is
/// initialized exactly as fit() does; higher bands start with zero
/// coefficients. With B = 0 the run matches fit() bitwise.
CosineFitResult cosine_fit(const SdfOracle& oracle, int max_band, const GridConfig& band_config,
                           const TrainConfig& config, const ProgressFn& progress = {});

/// Axis-aligned splitting plane: keys whose lattice coordinate along `axis`
/// is below `threshold` come from the first grid.
struct SplicePlane {
  int axis = 0;
  double threshold = 0.0;
};

/// Per-key channel copy from `a` or `b` by base lattice position; offsets
/// travel with their key. Throws ConfigError when the grids differ in shape.
ParamGrid splice_grids(const ParamGrid& a, const ParamGrid& b, const SplicePlane& plane);

}  // namespace efg
