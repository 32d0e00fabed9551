#include "efg/trainer.hpp"

#include "../support/random_grid.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace efg;

namespace {

TrainConfig small_config(std::int64_t iters) {
  TrainConfig c;
  c.iterations = iters;
  c.batch_volume = 256;
  c.batch_near = 256;
  c.mean_shift_points = 512;
  c.seed = 5;
  c.log_every = 1;
  return c;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_volume = 0;
  c.batch_near = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AdamW, ZeroGradientNoDecayLeavesParameters) {
  std::mt19937_64 rng(1);
  ParamGrid g = efg::testing::random_grid({Variant::Combined, Degree::Linear, 2, true}, rng);
  const ParamGrid before = g;
  OptimizerState s(g);
  TrainConfig c;
  c.weight_decay = 0;
  adamw_step(g, GradBuffer(g), s, c);
  EXPECT_TRUE(g == before);
  EXPECT_EQ(s.step, 1);
}

TEST(AdamW, DecoupledDecayTouchesCoefficientsOnly) {
  std::mt19937_64 rng(2);
  ParamGrid g = efg::testing::random_grid({Variant::Combined, Degree::Linear, 2, true}, rng);
  const ParamGrid before = g;
  OptimizerState s(g);
  TrainConfig c;
  c.weight_decay = 0.5;
  adamw_step(g, GradBuffer(g), s, c);
  for (std::int64_t k = 0; k < g.key_count(); ++k) {
    for (int ch = 0; ch < g.channels(); ++ch) {
      const double expect = g.layout().role(ch) == ChannelRole::Coefficient
                                ? before.at(k, ch) * (1.0 - c.learning_rate * c.weight_decay)
                                : before.at(k, ch);
      EXPECT_EQ(g.at(k, ch), expect);
    }
  }
}

TEST(AdamW, FirstStepClosedForm) {
  ParamGrid g({Variant::FuncInterp, Degree::Constant, 1, true});
  g.at(0, 0) = 0.25;
  OptimizerState s(g);
  GradBuffer grad(g);
  grad.values[0] = 0.3;
  TrainConfig c;
  c.weight_decay = 0;
  adamw_step(g, grad, s, c);
  const double step = g.at(0, 0) - 0.25;
  const double delta = 1.0 + step / c.learning_rate;
  EXPECT_LT(step, 0.0);
  EXPECT_GE(delta, 0.0);
  EXPECT_LT(delta, 1e-6);
  EXPECT_EQ(g.at(0, 1), kInitialLogScale);
}

TEST(AdamW, ShapeMismatchThrows) {
  ParamGrid g({Variant::FuncInterp, Degree::Linear, 2, true});
  OptimizerState s(g);
  GradBuffer other(ParamGrid({Variant::FuncInterp, Degree::Linear, 3, true}));
  EXPECT_THROW(adamw_step(g, other, s, TrainConfig{}), ConfigError);
}

TEST(MeanShift, SinglePointAndSymmetricPair) {
  ParamGrid g({Variant::OffsetOnly, Degree::Constant, 3, true});
  const std::vector<Vec3> one{Vec3(0.1, 0.2, -0.3)};
  const ParamGrid a = mean_shift_init(g, one);
  for (std::int64_t k = 0; k < g.key_count(); ++k) EXPECT_LE((a.key_position(0, k) - one[0]).norm(), 1e-15);

  const Vec3 center = g.lattice_point(13);
  const std::vector<Vec3> pair{center + Vec3(0.05, 0, 0), center - Vec3(0.05, 0, 0)};
  const ParamGrid b = mean_shift_init(g, pair);
  EXPECT_LE((b.key_position(0, 13) - center).norm(), 1e-15);
}

TEST(MeanShift, PullsKeysTowardSphere) {
  const SdfOracle sphere(Sphere{1.0});
  std::mt19937_64 rng(3);
  const auto pts = sphere.sample_surface(4096, rng);
  ParamGrid g({Variant::OffsetOnly, Degree::Constant, 16, true});
  const ParamGrid shifted = mean_shift_init(g, pts);
  std::vector<std::int64_t> candidates;
  for (std::int64_t k = 0; k < g.key_count(); ++k) {
    const double r = g.lattice_point(k).norm();
    if (r >= 0.3 && r <= 1.2) candidates.push_back(k);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(100);
  for (std::int64_t k : candidates) {
    const Vec3 key = g.lattice_point(k);
    // Direct weighted mean.
    double den = 0;
    Vec3 num = Vec3::Zero();
    for (const Vec3& s : pts) {
      const double w = std::exp(-100.0 * (key - s).squaredNorm());
      den += w;
      num += w * s;
    }
    const Vec3 target = num / den;
    EXPECT_LE((shifted.key_position(0, k) - target).norm(), 1e-12);
    // Within a kernel width of the sphere the cap mean sits slightly inside it,
    // so only keys at least 0.02 away are required to improve.
    const double r = key.norm();
    if (std::abs(r - 1.0) >= 0.02) EXPECT_LT(std::abs(target.norm() - 1.0), std::abs(r - 1.0)) << "key " << k;
  }
}

TEST(MeanShift, LeavesLatticeBankAndRejectsBadInput) {
  std::mt19937_64 rng(4);
  ParamGrid g = efg::testing::random_grid({Variant::Combined, Degree::Linear, 3, true}, rng);
  const SdfOracle sphere(Sphere{0.5});
  const ParamGrid s = mean_shift_init(g, sphere.sample_surface(100, rng));
  for (std::int64_t k = 0; k < g.key_count(); ++k) {
    EXPECT_EQ(s.key_position(0, k), g.lattice_point(k));
    for (int ch = 0; ch < 5; ++ch) EXPECT_EQ(s.at(k, ch), g.at(k, ch));
  }
  EXPECT_THROW(mean_shift_init(g, std::vector<Vec3>{}), InputError);
  EXPECT_THROW(mean_shift_init(ParamGrid({Variant::FuncInterp, Degree::Linear, 2, true}), std::vector<Vec3>{Vec3::Zero()}),
               ConfigError);
}

TEST(SampleBatch, VolumeOnlyDeterministicAndExactTargets) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c;
  c.batch_volume = 300;
  c.batch_near = 0;
  std::mt19937_64 r1(9), r2(9);
  const TrainingBatch a = sample_batch(sphere, c, r1);
  const TrainingBatch b = sample_batch(sphere, c, r2);
  ASSERT_EQ(a.queries.size(), 300u);
  for (std::size_t j = 0; j < a.queries.size(); ++j) {
    EXPECT_EQ(a.queries[j], b.queries[j]);
    EXPECT_LE(a.queries[j].cwiseAbs().maxCoeff(), 1.0);
    EXPECT_NEAR(a.targets[j], a.queries[j].norm() - 0.5, 1e-12);
  }
}

TEST(SampleBatch, NearSurfacePoints) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c;
  c.batch_volume = 10;
  c.batch_near = 2000;
  std::mt19937_64 rng(10);
  const TrainingBatch b = sample_batch(sphere, c, rng);
  ASSERT_EQ(b.queries.size(), 2010u);
  double sq = 0;
  for (std::size_t j = 10; j < b.queries.size(); ++j) {
    EXPECT_NEAR(b.targets[j], b.queries[j].norm() - 0.5, 1e-12);
    sq += b.targets[j] * b.targets[j];
  }
  // Radial component of N(0, sigma^2 I) noise has standard deviation sigma.
  EXPECT_NEAR(std::sqrt(sq / 2000.0), 0.01, 0.002);
}

TEST(Seeds, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, Stream::Init), derive_seed(1, Stream::Sampling));
  EXPECT_NE(derive_seed(1, Stream::Init), derive_seed(2, Stream::Init));
  EXPECT_NE(derive_seed(1, Stream::Init, 0), derive_seed(1, Stream::Init, 1));
  EXPECT_EQ(derive_seed(7, Stream::MeanShift, 3), derive_seed(7, Stream::MeanShift, 3));
}

TEST(Fit, NrbfLossDecreases) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c = small_config(200);
  c.learning_rate = 1e-2;
  const FitResult r = fit(sphere, {Variant::Nrbf, Degree::Constant, 4, true}, c);
  ASSERT_EQ(r.history.size(), 200u);
  for (const auto& rec : r.history) EXPECT_TRUE(std::isfinite(rec.loss));
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
}

TEST(Fit, TrilinearLossDecreases) {
  const SdfOracle box(Box{});
  TrainConfig c = small_config(100);
  c.learning_rate = 5e-2;
  const FitResult r = fit(box, {Variant::Trilinear, Degree::Constant, 5, true}, c);
  EXPECT_LT(r.history.back().loss, 0.5 * r.history.front().loss);
}

TEST(Fit, BitwiseReproducible) {
  const SdfOracle torus(Torus{});
  TrainConfig c = small_config(20);
  c.workers = 2;
  const GridConfig g{Variant::Combined, Degree::Linear, 4, true};
  const FitResult a = fit(torus, g, c);
  const FitResult b = fit(torus, g, c);
  EXPECT_TRUE(a.grid == b.grid);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) EXPECT_EQ(a.history[k].loss, b.history[k].loss);
  c.seed = 6;
  EXPECT_FALSE(fit(torus, g, c).grid == a.grid);
}

TEST(Fit, HistoryCadence) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c = small_config(25);
  c.log_every = 10;
  std::vector<std::int64_t> seen;
  const FitResult r = fit(sphere, {Variant::FuncInterp, Degree::Linear, 3, true}, c,
                          [&](const LossRecord& rec) { seen.push_back(rec.iteration); });
  EXPECT_EQ(seen, (std::vector<std::int64_t>{0, 10, 20, 24}));
  EXPECT_EQ(r.history.size(), 4u);
}

TEST(Fit, MeanShiftAppliedToInitialGrid) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c = small_config(0);
  const ParamGrid with = initial_grid(sphere, {Variant::Combined, Degree::Linear, 6, true}, c);
  c.mean_shift = false;
  const ParamGrid without = initial_grid(sphere, {Variant::Combined, Degree::Linear, 6, true}, c);
  double near_with = 0, near_without = 0;
  for (std::int64_t k = 0; k < with.key_count(); ++k) {
    near_with += std::abs(with.key_position(1, k).norm() - 0.5);
    near_without += std::abs(without.key_position(1, k).norm() - 0.5);
    EXPECT_EQ(with.at(k, 0), without.at(k, 0));
  }
  EXPECT_LT(near_with, 0.5 * near_without);
}

TEST(Fit, DivergenceAbortsWithSnapshot) {
  const SdfOracle sphere(Sphere{0.5});
  TrainConfig c = small_config(50);
  c.learning_rate = 1e200;
  try {
    fit(sphere, {Variant::FuncInterp, Degree::Cubic, 3, true}, c);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_GT(e.iteration, 0);
    EXPECT_EQ(e.snapshot.resolution(), 3);
  }
}
