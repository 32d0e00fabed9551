#include "efg/composition.hpp"

#include "efg/gradients.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace efg {

namespace {

bool same_shape(const GridConfig& a, const GridConfig& b) {
  return a.variant == b.variant && a.degree == b.degree && a.resolution == b.resolution &&
         a.learnable_scale == b.learnable_scale;
}

}  // namespace

std::int64_t CosineStack::param_count() const {
  std::int64_t total = 0;
  for (const auto& g : bands) total += static_cast<std::int64_t>(g.data().size());
  return total;
}

void CosineStack::validate() const {
  if (bands.empty()) throw ConfigError("cosine stack has no bands");
  for (const auto& g : bands) {
    if (!same_shape(g.config(), bands[0].config())) throw ConfigError("cosine stack bands differ in shape");
  }
}

double cosine_weight(int band, const Vec3& q) {
  if (band == 0) return 1.0;
  const double f = band * std::numbers::pi;
  return std::cos(f * q.x()) * std::cos(f * q.y()) * std::cos(f * q.z());
}

std::vector<std::vector<double>> cosine_partial_sums(const CosineStack& stack, std::span<const Vec3> queries,
                                                     const EvalOptions& options) {
  stack.validate();
  std::vector<std::vector<double>> partial;
  partial.reserve(stack.bands.size());
  for (int b = 0; b < stack.band_count(); ++b) {
    std::vector<double> v = evaluate(stack.bands[static_cast<std::size_t>(b)], queries, options);
    for (std::size_t j = 0; j < queries.size(); ++j) {
      v[j] *= cosine_weight(b, queries[j]);
      if (b > 0) v[j] = partial.back()[j] + v[j];
    }
    partial.push_back(std::move(v));
  }
  return partial;
}

std::vector<double> cosine_eval(const CosineStack& stack, std::span<const Vec3> queries,
                                const EvalOptions& options) {
  stack.validate();
  std::vector<double> sum;
  for (int b = 0; b < stack.band_count(); ++b) {
    const std::vector<double> v = evaluate(stack.bands[static_cast<std::size_t>(b)], queries, options);
    if (b == 0) {
      sum = v;
      continue;
    }
    for (std::size_t j = 0; j < queries.size(); ++j) sum[j] += cosine_weight(b, queries[j]) * v[j];
  }
  return sum;
}

CosineFitResult cosine_fit(const SdfOracle& oracle, int max_band, const GridConfig& band_config,
                           const TrainConfig& config, const ProgressFn& progress) {
  if (max_band < 0) throw ConfigError("cosine_fit: band count must be >= 0");
  config.validate();
  CosineFitResult result;
  auto& bands = result.stack.bands;
  bands.push_back(initial_grid(oracle, band_config, config));
  TrainConfig upper = config;
  upper.init_stddev = 0.0;
  for (int b = 1; b <= max_band; ++b) bands.push_back(initial_grid(oracle, band_config, upper));

  const std::size_t nb = bands.size();
  std::vector<OptimizerState> states;
  std::vector<GradBuffer> grads;
  for (const auto& g : bands) {
    states.emplace_back(g);
    grads.emplace_back(g);
  }
  std::mt19937_64 rng(derive_seed(config.seed, Stream::Sampling));
  const EvalOptions opts{config.workers};
  std::vector<EvalBatch> outs(nb);
  std::vector<std::vector<double>> weights(nb);
  std::vector<double> prediction;
  std::vector<double> upstream;

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const TrainingBatch batch = sample_batch(oracle, config, rng);
    const std::size_t nq = batch.queries.size();
    for (std::size_t b = 0; b < nb; ++b) {
      outs[b] = forward(bands[b], batch.queries, opts);
      weights[b].resize(nq);
      for (std::size_t j = 0; j < nq; ++j) weights[b][j] = cosine_weight(static_cast<int>(b), batch.queries[j]);
    }
    prediction = outs[0].outputs;
    for (std::size_t b = 1; b < nb; ++b) {
      for (std::size_t j = 0; j < nq; ++j) prediction[j] += weights[b][j] * outs[b].outputs[j];
    }
    const LossResult loss = mse_loss(prediction, batch.targets);
    if (!std::isfinite(loss.loss)) {
      throw TrainingAborted("non-finite loss at iteration " + std::to_string(it), it, bands[0]);
    }
    if (it % config.log_every == 0 || it + 1 == config.iterations) {
      const LossRecord rec{it, loss.loss};
      result.history.push_back(rec);
      if (progress) progress(rec);
    }
    for (std::size_t b = 0; b < nb; ++b) {
      upstream.resize(nq);
      for (std::size_t j = 0; j < nq; ++j) upstream[j] = loss.upstream[j] * weights[b][j];
      grads[b].clear();
      backward_accumulate(bands[b], outs[b], upstream, grads[b], opts);
      adamw_step(bands[b], grads[b], states[b], config);
    }
  }
  return result;
}

ParamGrid splice_grids(const ParamGrid& a, const ParamGrid& b, const SplicePlane& plane) {
  if (!same_shape(a.config(), b.config())) {
    throw ConfigError("splice: grids differ (" + to_string(a.variant()) + " R=" + std::to_string(a.resolution()) +
                      " vs " + to_string(b.variant()) + " R=" + std::to_string(b.resolution()) + ")");
  }
  if (plane.axis < 0 || plane.axis > 2) throw ConfigError("splice: axis must be 0, 1 or 2");
  ParamGrid out = a;
  const int channels = a.channels();
  for (std::int64_t key = 0; key < a.key_count(); ++key) {
    if (a.lattice_point(key)[plane.axis] < plane.threshold) continue;
    for (int c = 0; c < channels; ++c) out.at(key, c) = b.at(key, c);
  }
  return out;
}

}  // namespace efg
