#include "efg/gradients.hpp"

#include "../support/random_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace efg;
using efg::testing::random_grid;
using efg::testing::random_points;

namespace {

double weighted_output(const ParamGrid& g, std::span<const Vec3> q, std::span<const double> u) {
  const auto out = g.variant() == Variant::Trilinear ? forward_trilinear(g, q).values : forward_naive(g, q).outputs;
  double s = 0;
  for (std::size_t j = 0; j < q.size(); ++j) s += u[j] * out[j];
  return s;
}

// Central differences of sum_j u_j O(q_j) over every stored channel.
void expect_matches_fd(const ParamGrid& g, std::span<const Vec3> q, std::span<const double> u, double tol) {
  const GradBuffer grad = backward(g, forward(g, q), u);
  ASSERT_TRUE(grad.congruent_with(g));
  const double h = 1e-5;
  ParamGrid probe = g;
  for (std::size_t p = 0; p < g.data().size(); ++p) {
    const double keep = probe.data()[p];
    probe.data()[p] = keep + h;
    const double fp = weighted_output(probe, q, u);
    probe.data()[p] = keep - h;
    const double fm = weighted_output(probe, q, u);
    probe.data()[p] = keep;
    const double fd = (fp - fm) / (2 * h);
    const double err = std::abs(grad.values[p] - fd) / std::max(1e-3, std::abs(fd));
    EXPECT_LE(err, tol) << to_string(g.variant()) << " deg " << to_string(g.degree()) << " param " << p
                        << " analytic " << grad.values[p] << " fd " << fd;
  }
}

}  // namespace

TEST(MseLoss, Examples) {
  const std::vector<double> a{1, 3}, b{0, 1};
  const LossResult r = mse_loss(a, b);
  EXPECT_DOUBLE_EQ(r.loss, 2.5);
  EXPECT_EQ(r.upstream, (std::vector<double>{1, 2}));
  const LossResult one = mse_loss(std::vector<double>{1}, std::vector<double>{0});
  EXPECT_EQ(one.loss, 1.0);
  EXPECT_EQ(one.upstream[0], 2.0);
  const LossResult same = mse_loss(a, a);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.upstream, (std::vector<double>{0, 0}));
  EXPECT_THROW(mse_loss(a, std::vector<double>{1}), InputError);
}

TEST(Backward, ZeroUpstreamGivesZero) {
  std::mt19937_64 rng(1);
  const ParamGrid g = random_grid({Variant::Combined, Degree::Linear, 2, true}, rng);
  const auto q = random_points(9, rng);
  const GradBuffer grad = backward(g, forward(g, q), std::vector<double>(q.size(), 0.0));
  for (double v : grad.values) EXPECT_EQ(v, 0.0);
}

TEST(Backward, SingleKeyConstant) {
  ParamGrid g({Variant::FuncInterp, Degree::Constant, 1, true});
  g.at(0, 0) = 0.3;
  std::mt19937_64 rng(2);
  const auto q = random_points(7, rng);
  const std::vector<double> u{0.5, -1, 2, 0.25, 0, 1, -0.75};
  const GradBuffer grad = backward(g, forward(g, q), u);
  EXPECT_NEAR(grad.values[0], 2.0, 1e-14);
  EXPECT_EQ(grad.values[1], 0.0);
  EXPECT_EQ(grad.queries, 7);
}

TEST(Backward, MatchesFiniteDifferencesEveryVariant) {
  std::mt19937_64 rng(3);
  std::vector<GridConfig> configs{{Variant::Trilinear, Degree::Constant, 3, true},
                                  {Variant::Nrbf, Degree::Constant, 2, true},
                                  {Variant::FuncInterp, Degree::Cube, 2, true},
                                  {Variant::FuncInterp, Degree::Linear, 2, false},
                                  {Variant::Combined, Degree::Quadratic, 2, false}};
  for (Degree d : {Degree::Constant, Degree::Linear, Degree::Quadratic, Degree::Cubic}) {
    configs.push_back({Variant::FuncInterp, d, 2, true});
    configs.push_back({Variant::OffsetOnly, d, 2, true});
    configs.push_back({Variant::Combined, d, 2, true});
  }
  for (const GridConfig& c : configs) {
    const ParamGrid g = random_grid(c, rng);
    const auto q = random_points(5, rng);
    std::vector<double> u(q.size());
    for (double& v : u) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    expect_matches_fd(g, q, u, 1e-4);
  }
}

TEST(Backward, AdditiveOverQuerySubsets) {
  std::mt19937_64 rng(4);
  const ParamGrid g = random_grid({Variant::Combined, Degree::Linear, 3, true}, rng);
  const auto q = random_points(40, rng);
  std::vector<double> u(q.size());
  for (double& v : u) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const std::span<const Vec3> qa(q.data(), 15), qb(q.data() + 15, 25);
  const std::span<const double> ua(u.data(), 15), ub(u.data() + 15, 25);
  GradBuffer parts = backward(g, forward(g, qa), ua);
  parts += backward(g, forward(g, qb), ub);
  const GradBuffer whole = backward(g, forward(g, q), u);
  EXPECT_EQ(parts.queries, whole.queries);
  for (std::size_t p = 0; p < whole.values.size(); ++p)
    EXPECT_NEAR(parts.values[p], whole.values[p], 1e-12 * std::max(1.0, std::abs(whole.values[p])));
}

TEST(Backward, DeterministicPerWorkerCount) {
  std::mt19937_64 rng(5);
  const ParamGrid g = random_grid({Variant::OffsetOnly, Degree::Linear, 4, true}, rng);
  const auto q = random_points(333, rng);
  std::vector<double> u(q.size(), 0.01);
  const EvalBatch b = forward(g, q, {3});
  EXPECT_EQ(backward(g, b, u, {3}).values, backward(g, b, u, {3}).values);
  const auto one = backward(g, b, u, {1}).values;
  const auto three = backward(g, b, u, {3}).values;
  for (std::size_t p = 0; p < one.size(); ++p) EXPECT_NEAR(one[p], three[p], 1e-12 * std::max(1.0, std::abs(one[p])));
}

TEST(Backward, ContractViolations) {
  std::mt19937_64 rng(6);
  const ParamGrid g = random_grid({Variant::FuncInterp, Degree::Linear, 2, true}, rng);
  const auto q = random_points(4, rng);
  EvalBatch bare;
  bare.queries = q;
  EXPECT_THROW(backward(g, bare, std::vector<double>(4, 1.0)), ConfigError);
  EXPECT_THROW(backward(g, forward(g, q), std::vector<double>(3, 1.0)), InputError);
  GradBuffer other(ParamGrid({Variant::FuncInterp, Degree::Linear, 3, true}));
  EXPECT_THROW(backward_accumulate(g, forward(g, q), std::vector<double>(4, 1.0), other), ConfigError);
}
