#include "efg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace efg {

Vec3 TriMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[static_cast<std::size_t>(tri[0])];
  const Vec3& b = vertices[static_cast<std::size_t>(tri[1])];
  const Vec3& c = vertices[static_cast<std::size_t>(tri[2])];
  return (b - a).cross(c - a);
}

double TriMesh::triangle_area(std::size_t t) const { return 0.5 * triangle_normal(t).norm(); }

double TriMesh::surface_area() const {
  double total = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
  return total;
}

std::vector<Vec3> TriMesh::vertex_normals() const {
  std::vector<Vec3> n(vertices.size(), Vec3::Zero());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Vec3 fn = triangle_normal(t);
    for (int v : triangles[t]) n[static_cast<std::size_t>(v)] += fn;
  }
  for (auto& v : n) {
    const double len = v.norm();
    if (len > 0.0) v /= len;
  }
  return n;
}

namespace {

int resolve_index(const std::string& token, std::size_t vertex_count, int line) {
  const std::string head = token.substr(0, token.find('/'));
  long idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stol(head, &used);
    if (used != head.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InputError("obj line " + std::to_string(line) + ": bad face index '" + token + "'");
  }
  const long n = static_cast<long>(vertex_count);
  if (idx < 0) idx = n + idx;
  else idx -= 1;
  if (idx < 0 || idx >= n) {
    throw InputError("obj line " + std::to_string(line) + ": face index out of range");
  }
  return static_cast<int>(idx);
}

}  // namespace

TriMesh read_obj(std::istream& in) {
  TriMesh mesh;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::istringstream ls(text);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw InputError("obj line " + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(resolve_index(tok, mesh.vertices.size(), line_no));
      if (poly.size() < 3) throw InputError("obj line " + std::to_string(line_no) + ": face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (in.bad()) throw InputError("obj: read error");
  return mesh;
}

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_obj(in);
}

void write_obj(std::ostream& out, const TriMesh& mesh) {
  out.precision(9);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  const bool with_normals = !mesh.normals.empty() && mesh.normals.size() == mesh.vertices.size();
  if (with_normals) {
    for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (int v : t) {
      out << ' ' << v + 1;
      if (with_normals) out << "//" << v + 1;
    }
    out << '\n';
  }
}

void save_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_obj(out, mesh);
  if (!out) throw InputError("write failed: " + path);
}

std::size_t cleanup(TriMesh& mesh) {
  const auto nv = static_cast<int>(mesh.vertices.size());
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    bool valid = true;
    for (int v : tri) valid = valid && v >= 0 && v < nv;
    if (!valid || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (mesh.triangle_normal(t).squaredNorm() == 0.0) continue;
    kept.push_back(tri);
  }
  const std::size_t removed = mesh.triangles.size() - kept.size();
  mesh.triangles = std::move(kept);

  std::vector<int> remap(mesh.vertices.size(), -1);
  for (const auto& t : mesh.triangles)
    for (int v : t) remap[static_cast<std::size_t>(v)] = 0;
  std::vector<Vec3> verts;
  std::vector<Vec3> normals;
  const bool has_normals = mesh.normals.size() == mesh.vertices.size();
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<int>(verts.size());
    verts.push_back(mesh.vertices[v]);
    if (has_normals) normals.push_back(mesh.normals[v]);
  }
  for (auto& t : mesh.triangles)
    for (int& v : t) v = remap[static_cast<std::size_t>(v)];
  mesh.vertices = std::move(verts);
  mesh.normals = std::move(normals);
  return removed;
}

void normalize_to_domain(TriMesh& mesh, double margin) {
  if (mesh.vertices.empty()) throw InputError("cannot normalize an empty mesh");
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  if (!(half > 0.0)) throw InputError("mesh has zero extent");
  const double s = (1.0 - margin) / half;
  for (auto& v : mesh.vertices) v = (v - center) * s;
}

TriMesh icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(m.vertices.size());
      m.vertices.push_back((m.vertices[static_cast<std::size_t>(a)] + m.vertices[static_cast<std::size_t>(b)])
                               .normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::mt19937_64& rng,
                                 std::vector<int>* source) {
  if (mesh.empty()) throw InputError("cannot sample an empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) throw InputError("mesh has zero surface area");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> out(n);
  if (source) source->resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = u(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const auto t = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const auto& tri = mesh.triangles[t];
    const double r1 = std::sqrt(u(rng));
    const double r2 = u(rng);
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
    out[s] = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    if (source) (*source)[s] = static_cast<int>(t);
  }
  return out;
}

}  // namespace efg
