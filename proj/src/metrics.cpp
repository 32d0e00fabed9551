#include "efg/metrics.hpp"

#include "efg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace efg {

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) throw InputError("kd-tree needs at least one point");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  build(0, points_.size(), 0);
}

int KdTree::build(std::size_t first, std::size_t last, int depth) {
  if (first >= last) return -1;
  const int axis = depth % 3;
  const std::size_t mid = first + (last - first) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(first),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(last), [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({order_[mid], axis});
  const int left = build(first, mid, depth + 1);
  const int right = build(mid + 1, last, depth + 1);
  nodes_[static_cast<std::size_t>(index)].left = left;
  nodes_[static_cast<std::size_t>(index)].right = right;
  return index;
}

void KdTree::search(int index, const Vec3& q, std::size_t& best, double& best_d2) const {
  if (index < 0) return;
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  const Vec3& p = points_[node.point];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && node.point < best)) {
    best_d2 = d2;
    best = node.point;
  }
  const double delta = q[node.axis] - p[node.axis];
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  search(near, q, best, best_d2);
  if (delta * delta <= best_d2) search(far, q, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& q) const {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(0, q, best, best_d2);
  return {best, best_d2};
}

namespace {

double mean_nearest(std::span<const Vec3> from, const KdTree& to, int workers) {
  std::vector<double> d(from.size());
  parallel_for(from.size(), workers, [&](int, WorkRange r) {
    for (std::size_t k = r.begin; k < r.end; ++k) d[k] = std::sqrt(to.nearest(from[k]).second);
  });
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, int workers) {
  if (a.empty() || b.empty()) throw InputError("chamfer distance of an empty point set");
  const KdTree ta(a), tb(b);
  return mean_nearest(a, tb, workers) + mean_nearest(b, ta, workers);
}

NormalEstimate estimate_normals(const ParamGrid& grid, std::span<const Vec3> points,
                                const EvalOptions& options) {
  NormalEstimate out;
  out.normals.resize(points.size(), Vec3::Zero());
  out.flagged.resize(points.size(), false);
  if (points.empty()) return out;
  const EvalBatch batch = query_gradient(grid, points, options);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double len = batch.gradients[k].norm();
    if (!(len > 1e-10) || !std::isfinite(len)) {
      out.flagged[k] = true;
      ++out.flagged_count;
    } else {
      out.normals[k] = batch.gradients[k] / len;
    }
  }
  return out;
}

double absolute_error(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw InputError("absolute_error: mismatched or empty inputs");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) sum += std::abs(predicted[k] - truth[k]);
  return 1e4 * sum / static_cast<double>(predicted.size());
}

double sign_iou(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw InputError("sign_iou: mismatched inputs");
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const bool p = predicted[k] < 0.0, t = truth[k] < 0.0;
    inter += (p && t) ? 1 : 0;
    uni += (p || t) ? 1 : 0;
  }
  if (uni == 0) return 100.0;
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

VolumeMetrics volume_metrics(const ParamGrid& grid, const SdfOracle& oracle, const MetricBudget& budget) {
  std::mt19937_64 rng(budget.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, budget.near_sigma);
  std::vector<Vec3> vol(budget.volume_samples);
  for (auto& p : vol) {
    const double x = u(rng), y = u(rng), z = u(rng);
    p = Vec3(x, y, z);
  }
  std::vector<Vec3> near = oracle.sample_surface(budget.near_samples, rng);
  for (auto& p : near) {
    const double x = noise(rng), y = noise(rng), z = noise(rng);
    p += Vec3(x, y, z);
  }
  const EvalOptions opts{budget.workers};
  VolumeMetrics m;
  if (!vol.empty()) {
    const auto pred = evaluate(grid, vol, opts);
    const auto truth = oracle.distances(vol, budget.workers);
    m.volume_ae = absolute_error(pred, truth);
    m.volume_iou = sign_iou(pred, truth);
  }
  if (!near.empty()) {
    const auto pred = evaluate(grid, near, opts);
    const auto truth = oracle.distances(near, budget.workers);
    m.near_ae = absolute_error(pred, truth);
    m.near_iou = sign_iou(pred, truth);
  }
  return m;
}

Isosurface extract_surface(const ParamGrid& grid, int resolution, const EvalOptions& options) {
  return marching_cubes(
      [&](std::span<const Vec3> pts, std::span<double> values) {
        const auto v = evaluate(grid, pts, options);
        std::copy(v.begin(), v.end(), values.begin());
      },
      resolution);
}

double surface_chamfer(const TriMesh& mesh, const SdfOracle& oracle, std::size_t samples,
                       std::uint64_t seed, int workers) {
  if (mesh.empty()) return std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const auto a = sample_surface(mesh, samples, rng);
  const auto b = oracle.sample_surface(samples, rng);
  return chamfer(a, b, workers);
}

}  // namespace efg
