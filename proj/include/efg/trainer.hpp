#pragma once

#include "efg/gradients.hpp"
#include "efg/param_grid.hpp"
#include "efg/sdf.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace efg {

struct TrainConfig {
  double learning_rate = 6e-4;
  std::int64_t batch_volume = 16384;
  std::int64_t batch_near = 16384;
  std::int64_t iterations = 2000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
  std::uint64_t seed = 0;
  double near_surface_sigma = 0.01;
  /// Standard deviation of the initial constant terms.
  double init_stddev = 0.1;
  /// Offset variants only: pull the offset bank onto the surface before training.
  bool mean_shift = true;
  std::int64_t mean_shift_points = 16384;
  /// Record the batch loss every this many iterations (and at the last one).
  std::int64_t log_every = 10;
  int workers = 1;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

/// AdamW moments, congruent with ParamGrid::data().
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  OptimizerState() = default;
  explicit OptimizerState(const ParamGrid& grid);
};

struct TrainingBatch {
  std::vector<Vec3> queries;
  std::vector<double> targets;
};

/// batch_volume uniform points in [-1,1]^3 followed by batch_near surface
/// samples perturbed by N(0, sigma^2 I), with oracle distances as targets.
TrainingBatch sample_batch(const SdfOracle& oracle, const TrainConfig& config, std::mt19937_64& rng);

/// Moves every offset-bank key to the softmax(-100 |k - s|^2)-weighted mean of
/// the surface points (offsets are measured from the lattice point).
/// Throws InputError for an empty point set and ConfigError for variants
/// without an offset bank.
ParamGrid mean_shift_init(const ParamGrid& grid, std::span<const Vec3> surface_points);

/// One AdamW update with bias correction. Decoupled weight decay touches
/// polynomial coefficients only; offsets and log-scales are not decayed.
void adamw_step(ParamGrid& grid, const GradBuffer& grads, OptimizerState& state, const TrainConfig& config);

struct LossRecord {
  std::int64_t iteration = 0;
  double loss = 0.0;
};

struct FitResult {
  ParamGrid grid;
  std::vector<LossRecord> history;
};

/// Independent random streams derived from the run seed.
enum class Stream : std::uint64_t { Init = 0, Sampling = 1, MeanShift = 2 };
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Initial grid of a fit: random constants and, for offset variants with
/// mean_shift enabled, mean-shift offsets.
ParamGrid initial_grid(const SdfOracle& oracle, const GridConfig& grid_config, const TrainConfig& config);

/// Thrown when the loss becomes non-finite; carries the grid at that iteration.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, std::int64_t iteration, ParamGrid snapshot)
      : NumericalError(what), iteration(iteration), snapshot(std::move(snapshot)) {}
  std::int64_t iteration;
  ParamGrid snapshot;
};

using ProgressFn = std::function<void(const LossRecord&)>;

/// sample -> forward -> MSE -> backward -> AdamW for config.iterations steps.
/// Deterministic for a fixed seed and worker count.
FitResult fit(const SdfOracle& oracle, const GridConfig& grid_config, const TrainConfig& config,
              const ProgressFn& progress = {});

/// Continues training from an existing grid and optimizer state.
FitResult fit_from(const SdfOracle& oracle, ParamGrid grid, OptimizerState& state, const TrainConfig& config,
                   const ProgressFn& progress = {});

}  // namespace efg
