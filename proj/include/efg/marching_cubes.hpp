#pragma once

#include "efg/mesh.hpp"

#include <functional>
#include <span>

namespace efg {

/// Fills values[k] with the field at points[k].
using FieldFn = std::function<void(std::span<const Vec3> points, std::span<double> values)>;

struct Isosurface {
  TriMesh mesh;
  /// False when the field has no sign change on the sample lattice.
  bool has_surface = false;
};

/// Zero level set of `field` sampled on an M x M x M lattice spanning
/// [-1,1]^3. Negative is inside; triangles wind counter-clockwise seen from
/// outside. The field is requested one z-layer (M^2 points) at a time and
/// vertices on shared edges are welded.
Isosurface marching_cubes(const FieldFn& field, int resolution);

}  // namespace efg
