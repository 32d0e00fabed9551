#pragma once

#include "efg/eval.hpp"
#include "efg/marching_cubes.hpp"
#include "efg/mesh.hpp"
#include "efg/param_grid.hpp"
#include "efg/sdf.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace efg {

/// Static 3-d tree for exact nearest-neighbor queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Index of the nearest point (ties broken by lower index) and its squared distance.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t point;
    int axis;
    int left = -1, right = -1;
  };
  int build(std::size_t first, std::size_t last, int depth);
  void search(int node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Mean nearest-neighbor distance from a to b plus from b to a.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, int workers = 1);

struct NormalEstimate {
  std::vector<Vec3> normals;   // unit length, or zero where flagged
  std::vector<bool> flagged;   // gradient too small to normalize
  std::size_t flagged_count = 0;
};

/// Normalized dO/dq at each point.
NormalEstimate estimate_normals(const ParamGrid& grid, std::span<const Vec3> points,
                                const EvalOptions& options = {});

/// Volume-AE (x1e4), Volume-IOU (%), Near-AE (x1e4), Near-IOU (%).
struct VolumeMetrics {
  double volume_ae = 0.0;
  double volume_iou = 0.0;
  double near_ae = 0.0;
  double near_iou = 0.0;
};

struct MetricBudget {
  std::size_t volume_samples = 100000;
  std::size_t near_samples = 100000;
  double near_sigma = 0.01;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Mean |p - t| scaled by 1e4.
double absolute_error(std::span<const double> predicted, std::span<const double> truth);
/// Intersection over union of {p < 0} and {t < 0}, in percent (100 when both are empty).
double sign_iou(std::span<const double> predicted, std::span<const double> truth);

/// Compares the grid against the oracle on uniform samples in [-1,1]^3 and on
/// near-surface samples (surface point + N(0, sigma^2) noise).
VolumeMetrics volume_metrics(const ParamGrid& grid, const SdfOracle& oracle, const MetricBudget& budget);

/// Isosurface of the grid on an M^3 lattice.
Isosurface extract_surface(const ParamGrid& grid, int resolution, const EvalOptions& options = {});

/// Chamfer distance between area-weighted samples of `mesh` and surface
/// samples of the oracle, `samples` points each.
double surface_chamfer(const TriMesh& mesh, const SdfOracle& oracle, std::size_t samples,
                       std::uint64_t seed, int workers = 1);

}  // namespace efg
