#pragma once

#include "efg/eval.hpp"
#include "efg/param_grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace efg {

/// dL/dtheta laid out exactly like ParamGrid::data(): coefficient channels
/// hold dL/dphi, log-scale channels dL/dlog(beta), offset channels dL/dDelta.
/// Lattice keys are not parameters and have no entries.
struct GradBuffer {
  GridConfig config;
  std::vector<double> values;
  /// Number of queries accumulated into this buffer.
  std::int64_t queries = 0;

  GradBuffer() = default;
  explicit GradBuffer(const ParamGrid& grid);

  bool congruent_with(const ParamGrid& grid) const;
  GradBuffer& operator+=(const GradBuffer& other);
  void clear();
};

struct LossResult {
  double loss = 0.0;
  /// dL/dO per query.
  std::vector<double> upstream;
};

/// Mean squared error (1/J) sum (O_j - o_j)^2 and its gradient 2/J (O_j - o_j).
LossResult mse_loss(std::span<const double> predictions, std::span<const double> targets);

/// Streaming backward pass: accumulates sum_j upstream_j * dO(q_j)/dtheta.
/// Requires the outputs and saved denominators of a forward pass on the same
/// grid (trilinear grids need outputs only). Workspace is O(J + I*C).
GradBuffer backward(const ParamGrid& grid, const EvalBatch& batch, std::span<const double> upstream,
                    const EvalOptions& options = {});

void backward_accumulate(const ParamGrid& grid, const EvalBatch& batch,
                         std::span<const double> upstream, GradBuffer& out,
                         const EvalOptions& options = {});

}  // namespace efg
