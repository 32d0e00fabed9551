#include "efg/composition.hpp"

#include "efg/efg_io.hpp"

#include "../support/random_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace efg;
using efg::testing::random_grid;
using efg::testing::random_points;
using efg::testing::rel_err;

namespace {

CosineStack random_stack(int bands, std::mt19937_64& rng) {
  CosineStack s;
  for (int b = 0; b < bands; ++b) s.bands.push_back(random_grid({Variant::FuncInterp, Degree::Linear, 3, true}, rng));
  return s;
}

TrainConfig tiny(std::int64_t iters) {
  TrainConfig c;
  c.iterations = iters;
  c.batch_volume = 128;
  c.batch_near = 128;
  c.seed = 3;
  c.log_every = 1;
  return c;
}

}  // namespace

TEST(Cosine, WeightExamples) {
  EXPECT_EQ(cosine_weight(0, Vec3(0.3, -0.2, 0.9)), 1.0);
  EXPECT_EQ(cosine_weight(3, Vec3::Zero()), 1.0);
  EXPECT_NEAR(cosine_weight(1, Vec3(0.5, 0, 0)), 0.0, 1e-15);
  EXPECT_NEAR(cosine_weight(2, Vec3(0.5, 0.5, 0)), 1.0, 1e-15);
}

TEST(Cosine, SingleBandIsPlainEvaluation) {
  std::mt19937_64 rng(1);
  const CosineStack s = random_stack(1, rng);
  const auto q = random_points(100, rng);
  EXPECT_EQ(cosine_eval(s, q), forward_streaming(s.bands[0], q).outputs);
}

TEST(Cosine, OriginSumsBands) {
  std::mt19937_64 rng(2);
  const CosineStack s = random_stack(4, rng);
  const std::vector<Vec3> origin{Vec3::Zero()};
  double sum = 0;
  for (const auto& b : s.bands) sum += forward_naive(b, origin).outputs[0];
  EXPECT_LE(rel_err(cosine_eval(s, origin)[0], sum), 1e-12);
}

TEST(Cosine, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  const CosineStack s = random_stack(4, rng);
  const auto q = random_points(50, rng);
  const auto got = cosine_eval(s, q);
  const auto partial = cosine_partial_sums(s, q);
  ASSERT_EQ(partial.size(), 4u);
  for (std::size_t j = 0; j < q.size(); ++j) {
    double sum = 0;
    for (int b = 0; b < 4; ++b) {
      const double w = std::cos(b * std::numbers::pi * q[j].x()) * std::cos(b * std::numbers::pi * q[j].y()) *
                       std::cos(b * std::numbers::pi * q[j].z());
      sum += w * forward_naive(s.bands[static_cast<std::size_t>(b)], std::vector<Vec3>{q[j]}).outputs[0];
      EXPECT_NEAR(partial[static_cast<std::size_t>(b)][j], sum, 1e-12 * std::max(1.0, std::abs(sum)));
    }
    EXPECT_NEAR(got[j], sum, 1e-12 * std::max(1.0, std::abs(sum)));
    EXPECT_EQ(partial.back()[j], got[j]);
  }
}

TEST(Cosine, LinearInBandConstants) {
  std::mt19937_64 rng(4);
  CosineStack s;
  for (int b = 0; b < 3; ++b) s.bands.push_back(random_grid({Variant::FuncInterp, Degree::Constant, 3, true}, rng));
  const auto q = random_points(30, rng);
  const auto base = cosine_eval(s, q);
  CosineStack without = s;
  for (std::int64_t k = 0; k < without.bands[2].key_count(); ++k) without.bands[2].at(k, 0) = 0.0;
  const auto rest = cosine_eval(without, q);
  CosineStack scaled = s;
  const double alpha = 2.5;
  for (std::int64_t k = 0; k < scaled.bands[2].key_count(); ++k) scaled.bands[2].at(k, 0) *= alpha;
  const auto got = cosine_eval(scaled, q);
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double band = base[j] - rest[j];
    EXPECT_NEAR(got[j], rest[j] + alpha * band, 1e-12);
  }
}

TEST(Cosine, StackValidation) {
  EXPECT_THROW(CosineStack{}.validate(), ConfigError);
  std::mt19937_64 rng(5);
  CosineStack s = random_stack(2, rng);
  EXPECT_EQ(s.param_count(), 2 * 27 * 5);
  s.bands.push_back(ParamGrid({Variant::FuncInterp, Degree::Linear, 4, true}));
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(cosine_eval(CosineStack{}, random_points(1, rng)), ConfigError);
}

TEST(CosineFit, ZeroBandsMatchesFitBitwise) {
  const SdfOracle sphere(Sphere{0.5});
  const GridConfig g{Variant::Combined, Degree::Linear, 4, true};
  const TrainConfig c = tiny(15);
  const FitResult plain = fit(sphere, g, c);
  const CosineFitResult stack = cosine_fit(sphere, 0, g, c);
  ASSERT_EQ(stack.stack.band_count(), 1);
  EXPECT_TRUE(stack.stack.bands[0] == plain.grid);
  ASSERT_EQ(stack.history.size(), plain.history.size());
  for (std::size_t k = 0; k < plain.history.size(); ++k) EXPECT_EQ(stack.history[k].loss, plain.history[k].loss);
}

TEST(CosineFit, MoreBandsTrainAndUpperBandsStartAtZero) {
  const SdfOracle torus(Torus{});
  const GridConfig g{Variant::FuncInterp, Degree::Linear, 4, true};
  TrainConfig c = tiny(40);
  c.learning_rate = 5e-3;
  const CosineFitResult r = cosine_fit(torus, 2, g, c);
  ASSERT_EQ(r.stack.band_count(), 3);
  for (const auto& rec : r.history) EXPECT_TRUE(std::isfinite(rec.loss));
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
  TrainConfig none = c;
  none.iterations = 0;
  const CosineFitResult start = cosine_fit(torus, 2, g, none);
  for (int b = 1; b < 3; ++b)
    for (std::int64_t k = 0; k < start.stack.bands[static_cast<std::size_t>(b)].key_count(); ++k)
      EXPECT_EQ(start.stack.bands[static_cast<std::size_t>(b)].at(k, 0), 0.0);
  EXPECT_THROW(cosine_fit(torus, -1, g, c), ConfigError);
}

TEST(Splice, SelfIsIdentity) {
  std::mt19937_64 rng(6);
  const ParamGrid a = random_grid({Variant::Combined, Degree::Linear, 5, true}, rng);
  for (int axis = 0; axis < 3; ++axis) {
    for (double t : {-2.0, -0.3, 0.0, 0.5, 2.0}) EXPECT_TRUE(splice_grids(a, a, {axis, t}) == a);
  }
}

TEST(Splice, ComplementaryPartition) {
  std::mt19937_64 rng(7);
  const ParamGrid a = random_grid({Variant::OffsetOnly, Degree::Linear, 4, true}, rng);
  const ParamGrid b = random_grid({Variant::OffsetOnly, Degree::Linear, 4, true}, rng);
  const SplicePlane plane{1, 0.1};
  const ParamGrid ab = splice_grids(a, b, plane);
  const ParamGrid ba = splice_grids(b, a, plane);
  for (std::int64_t k = 0; k < a.key_count(); ++k) {
    const bool side_a = a.lattice_point(k).y() < plane.threshold;
    for (int c = 0; c < a.channels(); ++c) {
      EXPECT_EQ(ab.at(k, c), side_a ? a.at(k, c) : b.at(k, c));
      EXPECT_EQ(ba.at(k, c), side_a ? b.at(k, c) : a.at(k, c));
    }
  }
  std::stringstream sa, sb;
  write_efg(sa, a);
  write_efg(sb, ab);
  EXPECT_EQ(sa.str().substr(0, 18), sb.str().substr(0, 18));
}

TEST(Splice, RejectsMismatchedGrids) {
  const ParamGrid a({Variant::Combined, Degree::Linear, 4, true});
  EXPECT_THROW(splice_grids(a, ParamGrid({Variant::Combined, Degree::Linear, 5, true}), {}), ConfigError);
  EXPECT_THROW(splice_grids(a, ParamGrid({Variant::Combined, Degree::Constant, 4, true}), {}), ConfigError);
  EXPECT_THROW(splice_grids(a, ParamGrid({Variant::OffsetOnly, Degree::Linear, 4, true}), {}), ConfigError);
  EXPECT_THROW(splice_grids(a, a, {3, 0.0}), ConfigError);
}
