#include "efg/trainer.hpp"

#include "efg/eval.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace efg {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (batch_volume < 0 || batch_near < 0 || batch_volume + batch_near < 1) {
    throw ConfigError("batch sizes must be non-negative with at least one point in total");
  }
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(near_surface_sigma >= 0.0)) throw ConfigError("near_surface_sigma must be >= 0");
  if (!(init_stddev >= 0.0)) throw ConfigError("init_stddev must be >= 0");
  if (mean_shift_points < 1) throw ConfigError("mean_shift_points must be >= 1");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

OptimizerState::OptimizerState(const ParamGrid& grid)
    : m(grid.data().size(), 0.0), v(grid.data().size(), 0.0) {}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  // splitmix64 finalizer over a combination of the inputs
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1) +
                    0xbf58476d1ce4e5b9ULL * index;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TrainingBatch sample_batch(const SdfOracle& oracle, const TrainConfig& config, std::mt19937_64& rng) {
  TrainingBatch batch;
  const auto nv = static_cast<std::size_t>(config.batch_volume);
  const auto nn = static_cast<std::size_t>(config.batch_near);
  batch.queries.reserve(nv + nn);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t k = 0; k < nv; ++k) {
    const double x = u(rng), y = u(rng), z = u(rng);
    batch.queries.emplace_back(x, y, z);
  }
  if (nn > 0) {
    std::normal_distribution<double> noise(0.0, config.near_surface_sigma);
    for (const Vec3& s : oracle.sample_surface(nn, rng)) {
      const double x = noise(rng), y = noise(rng), z = noise(rng);
      batch.queries.push_back(s + Vec3(x, y, z));
    }
  }
  batch.targets = oracle.distances(batch.queries, config.workers);
  return batch;
}

ParamGrid mean_shift_init(const ParamGrid& grid, std::span<const Vec3> surface_points) {
  if (surface_points.empty()) throw InputError("mean_shift_init: no surface points");
  const auto banks = grid.layout().banks();
  const BankLayout& bank = banks.back();
  if (bank.offset < 0) throw ConfigError("mean_shift_init: " + to_string(grid.variant()) + " has no offset bank");
  constexpr double kBandwidth = 100.0;
  ParamGrid out = grid;
  std::vector<double> a(surface_points.size());
  for (std::int64_t key = 0; key < grid.key_count(); ++key) {
    const Vec3 k = grid.lattice_point(key);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < surface_points.size(); ++n) {
      a[n] = -kBandwidth * (k - surface_points[n]).squaredNorm();
      top = std::max(top, a[n]);
    }
    double den = 0.0;
    Vec3 num = Vec3::Zero();
    for (std::size_t n = 0; n < surface_points.size(); ++n) {
      const double w = std::exp(a[n] - top);
      den += w;
      num += w * surface_points[n];
    }
    const Vec3 delta = num / den - k;
    for (int d = 0; d < 3; ++d) out.at(key, bank.offset + d) = delta[d];
  }
  return out;
}

void adamw_step(ParamGrid& grid, const GradBuffer& grads, OptimizerState& state, const TrainConfig& config) {
  if (!grads.congruent_with(grid)) throw ConfigError("adamw_step: gradient buffer does not match the grid");
  const std::size_t n = grid.data().size();
  if (state.m.size() != n || state.v.size() != n) throw ConfigError("adamw_step: optimizer state does not match the grid");

  ++state.step;
  const double lr = config.learning_rate;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * config.weight_decay;

  const int channels = grid.channels();
  std::vector<bool> decayed(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) decayed[static_cast<std::size_t>(c)] = grid.layout().role(c) == ChannelRole::Coefficient;

  std::span<double> p = grid.data();
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grads.values[k];
    if (decayed[k % static_cast<std::size_t>(channels)]) p[k] *= decay;
    state.m[k] = b1 * state.m[k] + (1.0 - b1) * g;
    state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g;
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    p[k] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

ParamGrid initial_grid(const SdfOracle& oracle, const GridConfig& grid_config, const TrainConfig& config) {
  validate(grid_config);
  InitSpec spec;
  spec.seed = derive_seed(config.seed, Stream::Init);
  spec.constant_stddev = config.init_stddev;
  ParamGrid grid = init_grid(grid_config, spec);
  const auto banks = grid.layout().banks();
  if (config.mean_shift && banks.back().offset >= 0) {
    std::mt19937_64 rng(derive_seed(config.seed, Stream::MeanShift));
    const auto surface = oracle.sample_surface(static_cast<std::size_t>(config.mean_shift_points), rng);
    grid = mean_shift_init(grid, surface);
  }
  return grid;
}

FitResult fit_from(const SdfOracle& oracle, ParamGrid grid, OptimizerState& state, const TrainConfig& config,
                   const ProgressFn& progress) {
  config.validate();
  if (state.m.size() != grid.data().size()) state = OptimizerState(grid);
  std::mt19937_64 rng(derive_seed(config.seed, Stream::Sampling));
  const EvalOptions opts{config.workers};
  GradBuffer grads(grid);
  FitResult result{ParamGrid(grid.config()), {}};
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const TrainingBatch batch = sample_batch(oracle, config, rng);
    const EvalBatch out = forward(grid, batch.queries, opts);
    const LossResult loss = mse_loss(out.outputs, batch.targets);
    if (!std::isfinite(loss.loss)) {
      throw TrainingAborted("non-finite loss at iteration " + std::to_string(it), it, grid);
    }
    if (it % config.log_every == 0 || it + 1 == config.iterations) {
      const LossRecord rec{it, loss.loss};
      result.history.push_back(rec);
      if (progress) progress(rec);
    }
    grads.clear();
    backward_accumulate(grid, out, loss.upstream, grads, opts);
    adamw_step(grid, grads, state, config);
  }
  result.grid = std::move(grid);
  return result;
}

FitResult fit(const SdfOracle& oracle, const GridConfig& grid_config, const TrainConfig& config,
              const ProgressFn& progress) {
  config.validate();
  ParamGrid grid = initial_grid(oracle, grid_config, config);
  OptimizerState state(grid);
  return fit_from(oracle, std::move(grid), state, config, progress);
}

}  // namespace efg
