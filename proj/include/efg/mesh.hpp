#pragma once

#include "efg/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace efg {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  /// Optional per-vertex normals (empty, or one per vertex).
  std::vector<Vec3> normals;

  bool empty() const { return triangles.empty(); }
  Vec3 triangle_normal(std::size_t t) const;  // unnormalized, |n| = 2 * area
  double triangle_area(std::size_t t) const;
  double surface_area() const;
  /// Area-weighted average of incident face normals, unit length (zero for
  /// isolated vertices).
  std::vector<Vec3> vertex_normals() const;
};

/// Parses `v` and `f` records; polygons are fan-triangulated, negative
/// (relative) indices and `v/vt/vn` forms are accepted. Throws InputError.
TriMesh read_obj(std::istream& in);
TriMesh load_obj(const std::string& path);

/// Writes `v`, optional `vn` and `f` records (1-based).
void write_obj(std::ostream& out, const TriMesh& mesh);
void save_obj(const std::string& path, const TriMesh& mesh);

/// Drops out-of-range and zero-area triangles, then unreferenced vertices.
/// Returns the number of triangles removed.
std::size_t cleanup(TriMesh& mesh);

/// Centers the bounding box at the origin and scales uniformly so the
/// longest half-extent is 1 - margin.
void normalize_to_domain(TriMesh& mesh, double margin = 0.05);

/// Icosahedron subdivided `subdivisions` times, projected onto the sphere.
TriMesh icosphere(int subdivisions, double radius = 1.0);

/// Area-weighted uniform surface samples. `source`, when given, receives the
/// triangle index of every sample.
std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::mt19937_64& rng,
                                 std::vector<int>* source = nullptr);

}  // namespace efg
