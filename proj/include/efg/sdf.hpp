#pragma once

#include "efg/mesh.hpp"
#include "efg/types.hpp"

#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace efg {

struct Sphere {
  double radius = 0.5;
};

struct Box {
  Vec3 half_extents = Vec3::Constant(0.5);
};

/// Ring in the xy-plane around the z axis.
struct Torus {
  double major = 0.5;
  double minor = 0.2;
};

/// Signed distance to a triangle mesh: exact unsigned distance through a
/// bounding volume hierarchy, sign from the generalized winding number
/// (negative where it exceeds 0.5).
class MeshSdf {
 public:
  explicit MeshSdf(TriMesh mesh);

  const TriMesh& mesh() const { return mesh_; }
  double distance(const Vec3& q) const;
  double unsigned_distance(const Vec3& q) const;
  Vec3 closest_point(const Vec3& q) const;
  double winding_number(const Vec3& q) const;

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;  // children, or -1 for leaves
    int first = 0, count = 0;   // triangle range in order_ for leaves
    // Far-field winding data: area-weighted normal sum and area centroid.
    Vec3 normal_sum = Vec3::Zero();
    Vec3 centroid = Vec3::Zero();
    double radius = 0.0;
  };

  int build(int first, int count);
  void closest(int node, const Vec3& q, double& best_d2, Vec3& best) const;
  double winding(int node, const Vec3& q) const;

  TriMesh mesh_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Ground-truth signed distance source (negative inside).
class SdfOracle {
 public:
  using Kind = std::variant<Sphere, Box, Torus, std::shared_ptr<const MeshSdf>>;

  explicit SdfOracle(Kind kind) : kind_(std::move(kind)) {}

  const Kind& kind() const { return kind_; }
  bool analytic() const { return kind_.index() != 3; }
  std::string describe() const;

  double distance(const Vec3& q) const;
  std::vector<double> distances(std::span<const Vec3> queries, int workers = 1) const;

  /// Uniform surface samples: closed form or rejection for analytic shapes,
  /// area-weighted for meshes.
  std::vector<Vec3> sample_surface(std::size_t n, std::mt19937_64& rng) const;

 private:
  Kind kind_;
};

/// `sphere:r=0.5`, `box:x=0.4,y=0.3,z=0.5` (or `box:h=0.5`),
/// `torus:R=0.5,r=0.2`; anything else is read as an OBJ path, normalized
/// into the domain. Omitted parameters keep their defaults.
SdfOracle parse_shape(std::string_view spec);

}  // namespace efg
