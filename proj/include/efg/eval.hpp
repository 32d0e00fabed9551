#pragma once

#include "efg/param_grid.hpp"

#include <span>
#include <vector>

namespace efg {

struct EvalOptions {
  int workers = 1;
};

/// Queries plus what the forward pass saves for the backward pass.
///
/// The softmax denominator is kept in shifted form: for query j,
///   e_j = exp(shift[j]) * denominator[j],
/// where shift[j] is the largest exponent -beta_i |q_j - k_i|^2 seen and
/// denominator[j] >= 1. The softmax weight of key i is therefore
/// exp(-beta_i |q_j - k_i|^2 - shift[j]) / denominator[j].
struct EvalBatch {
  std::vector<Vec3> queries;
  std::vector<double> outputs;
  std::vector<double> shift;
  std::vector<double> denominator;
  /// dO/dq per query; filled only by query_gradient().
  std::vector<Vec3> gradients;

  std::size_t size() const { return queries.size(); }
  bool has_saved_state() const {
    return shift.size() == queries.size() && denominator.size() == queries.size() &&
           outputs.size() == queries.size();
  }
  /// Unshifted e_j; may underflow for queries far from every key.
  double full_denominator(std::size_t j) const;
};

/// Reference evaluation: materializes the full I x J exponent matrix and
/// evaluates every key's polynomial through poly_eval. Quadratic memory; for
/// tests and small inputs only.
EvalBatch forward_naive(const ParamGrid& grid, std::span<const Vec3> queries);

/// Streaming evaluation with O(J) workspace: running max, denominator and
/// numerator per query, no per-(key, query) storage.
EvalBatch forward_streaming(const ParamGrid& grid, std::span<const Vec3> queries,
                            const EvalOptions& options = {});

/// O^nrbf with scalar values: the textbook normalized RBF, written against
/// the grid's constant terms only. Used to check the degree-0 reduction.
std::vector<double> forward_nrbf(const ParamGrid& grid, std::span<const Vec3> queries,
                                 const EvalOptions& options = {});

struct TrilinearResult {
  std::vector<double> values;
  /// Number of queries clamped onto the lattice hull.
  std::size_t clamped = 0;
};

/// 8-corner blend of node values. Queries outside [-1,1]^3 are clamped.
TrilinearResult forward_trilinear(const ParamGrid& grid, std::span<const Vec3> queries);

/// Trilinear corner indices and weights of one query (clamped to the hull).
struct TrilinearStencil {
  std::int64_t keys[8];
  double weights[8];
  bool clamped = false;
};
TrilinearStencil trilinear_stencil(int resolution, const Vec3& q);

/// Streaming evaluation that also fills EvalBatch::gradients with dO/dq.
EvalBatch query_gradient(const ParamGrid& grid, std::span<const Vec3> queries,
                         const EvalOptions& options = {});

/// Reference dO/dq through the materialized softmax (quadratic memory).
std::vector<Vec3> query_gradient_naive(const ParamGrid& grid, std::span<const Vec3> queries);

/// Field values for any variant: trilinear blend or streaming RBF evaluation.
std::vector<double> evaluate(const ParamGrid& grid, std::span<const Vec3> queries,
                             const EvalOptions& options = {});

/// Same as forward_streaming, but dispatches the trilinear variant too; the
/// batch then carries outputs only (shift and denominator are unused).
EvalBatch forward(const ParamGrid& grid, std::span<const Vec3> queries,
                  const EvalOptions& options = {});

}  // namespace efg
