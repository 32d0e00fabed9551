#include "efg/marching_cubes.hpp"

#include "mc_tables.hpp"

#include <algorithm>
#include <utility>

namespace efg {

namespace {

// Corner offsets (x, y, z) and edge endpoints in the table's numbering.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

class Extractor {
 public:
  Extractor(const FieldFn& field, int m) : field_(field), m_(m) {
    const auto mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    for (auto& layer : values_) layer.resize(mm);
    for (auto& e : xedge_) e.resize(mm);
    for (auto& e : yedge_) e.resize(mm);
    zedge_.resize(mm);
    points_.resize(mm);
  }

  Isosurface run() {
    sample_layer(0, values_[0]);
    for (int z = 0; z + 1 < m_; ++z) {
      sample_layer(z + 1, values_[1]);
      if (z == 0) {
        std::fill(xedge_[0].begin(), xedge_[0].end(), -1);
        std::fill(yedge_[0].begin(), yedge_[0].end(), -1);
      }
      std::fill(xedge_[1].begin(), xedge_[1].end(), -1);
      std::fill(yedge_[1].begin(), yedge_[1].end(), -1);
      std::fill(zedge_.begin(), zedge_.end(), -1);
      for (int y = 0; y + 1 < m_; ++y)
        for (int x = 0; x + 1 < m_; ++x) cell(x, y, z);
      std::swap(values_[0], values_[1]);
      std::swap(xedge_[0], xedge_[1]);
      std::swap(yedge_[0], yedge_[1]);
    }
    out_.has_surface = !out_.mesh.triangles.empty();
    return std::move(out_);
  }

 private:
  double coord(int i) const { return -1.0 + 2.0 * i / (m_ - 1); }
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(m_) * static_cast<std::size_t>(y);
  }

  void sample_layer(int z, std::vector<double>& dst) {
    for (int y = 0; y < m_; ++y)
      for (int x = 0; x < m_; ++x) points_[idx(x, y)] = Vec3(coord(x), coord(y), coord(z));
    field_(points_, dst);
  }

  double value(int corner, int x, int y) const {
    const int* c = kCorner[corner];
    return values_[c[2]][idx(x + c[0], y + c[1])];
  }

  int& edge_slot(int edge, int x, int y) {
    switch (edge) {
      case 0: return xedge_[0][idx(x, y)];
      case 1: return yedge_[0][idx(x + 1, y)];
      case 2: return xedge_[0][idx(x, y + 1)];
      case 3: return yedge_[0][idx(x, y)];
      case 4: return xedge_[1][idx(x, y)];
      case 5: return yedge_[1][idx(x + 1, y)];
      case 6: return xedge_[1][idx(x, y + 1)];
      case 7: return yedge_[1][idx(x, y)];
      case 8: return zedge_[idx(x, y)];
      case 9: return zedge_[idx(x + 1, y)];
      case 10: return zedge_[idx(x + 1, y + 1)];
      default: return zedge_[idx(x, y + 1)];
    }
  }

  int vertex(int edge, int x, int y, int z) {
    int& slot = edge_slot(edge, x, y);
    if (slot >= 0) return slot;
    const int a = kEdge[edge][0], b = kEdge[edge][1];
    const double va = value(a, x, y), vb = value(b, x, y);
    const double t = va / (va - vb);
    const Vec3 pa(coord(x + kCorner[a][0]), coord(y + kCorner[a][1]), coord(z + kCorner[a][2]));
    const Vec3 pb(coord(x + kCorner[b][0]), coord(y + kCorner[b][1]), coord(z + kCorner[b][2]));
    slot = static_cast<int>(out_.mesh.vertices.size());
    out_.mesh.vertices.push_back(pa + t * (pb - pa));
    return slot;
  }

  void cell(int x, int y, int z) {
    int cube = 0;
    for (int c = 0; c < 8; ++c) {
      if (value(c, x, y) < 0.0) cube |= 1 << c;
    }
    if (cube == 0 || cube == 255) return;
    const signed char* row = detail::kTriTable[cube];
    for (int k = 0; row[k] >= 0; k += 3) {
      const int a = vertex(row[k], x, y, z);
      const int b = vertex(row[k + 1], x, y, z);
      const int c = vertex(row[k + 2], x, y, z);
      // The table winds triangles clockwise seen from the positive side.
      if (a != b && b != c && a != c) out_.mesh.triangles.push_back({a, c, b});
    }
  }

  const FieldFn& field_;
  int m_;
  std::vector<double> values_[2];
  std::vector<int> xedge_[2], yedge_[2], zedge_;
  std::vector<Vec3> points_;
  Isosurface out_;
};

}  // namespace

Isosurface marching_cubes(const FieldFn& field, int resolution) {
  if (resolution < 2) throw ConfigError("marching cubes needs at least 2 samples per axis");
  Extractor ex(field, resolution);
  return ex.run();
}

}  // namespace efg
