#include "efg/sdf.hpp"

#include "efg/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace efg {

namespace {

// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  const Vec3 d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
  return d.squaredNorm();
}

// Signed solid angle of triangle abc seen from q (Van Oosterom and Strackee).
double solid_angle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 x = a - q, y = b - q, z = c - q;
  const double lx = x.norm(), ly = y.norm(), lz = z.norm();
  const double det = x.dot(y.cross(z));
  const double div = lx * ly * lz + x.dot(y) * lz + y.dot(z) * lx + z.dot(x) * ly;
  return 2.0 * std::atan2(det, div);
}

constexpr int kLeafSize = 4;
constexpr double kFarField = 2.0;

}  // namespace

MeshSdf::MeshSdf(TriMesh mesh) : mesh_(std::move(mesh)) {
  cleanup(mesh_);
  if (mesh_.empty()) throw InputError("mesh has no usable triangles");
  order_.resize(mesh_.triangles.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * order_.size() / kLeafSize + 1);
  build(0, static_cast<int>(order_.size()));
}

int MeshSdf::build(int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  Vec3 clo = node.lo, chi = node.hi;
  double area = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (int k = first; k < first + count; ++k) {
    const auto t = static_cast<std::size_t>(order_[static_cast<std::size_t>(k)]);
    Vec3 centroid = Vec3::Zero();
    for (int v : mesh_.triangles[t]) {
      const Vec3& p = mesh_.vertices[static_cast<std::size_t>(v)];
      node.lo = node.lo.cwiseMin(p);
      node.hi = node.hi.cwiseMax(p);
      centroid += p / 3.0;
    }
    clo = clo.cwiseMin(centroid);
    chi = chi.cwiseMax(centroid);
    const Vec3 n = 0.5 * mesh_.triangle_normal(t);
    const double a = n.norm();
    node.normal_sum += n;
    weighted += a * centroid;
    area += a;
  }
  node.centroid = area > 0.0 ? Vec3(weighted / area) : Vec3(0.5 * (node.lo + node.hi));
  node.radius = std::max((node.lo - node.centroid).norm(), (node.hi - node.centroid).norm());

  if (count <= kLeafSize) {
    node.first = first;
    node.count = count;
    nodes_[static_cast<std::size_t>(index)] = node;
    return index;
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const int mid = first + count / 2;
  auto centroid_axis = [&](int t) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(t)];
    double s = 0.0;
    for (int v : tri) s += mesh_.vertices[static_cast<std::size_t>(v)][axis];
    return s;
  };
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     const double ca = centroid_axis(a), cb = centroid_axis(b);
                     return ca < cb || (ca == cb && a < b);
                   });
  node.left = build(first, mid - first);
  node.right = build(mid, first + count - mid);
  nodes_[static_cast<std::size_t>(index)] = node;
  return index;
}

void MeshSdf::closest(int index, const Vec3& q, double& best_d2, Vec3& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  if (node.left < 0) {
    for (int k = node.first; k < node.first + node.count; ++k) {
      const auto& tri = mesh_.triangles[static_cast<std::size_t>(order_[static_cast<std::size_t>(k)])];
      const Vec3 p = closest_on_triangle(q, mesh_.vertices[static_cast<std::size_t>(tri[0])],
                                         mesh_.vertices[static_cast<std::size_t>(tri[1])],
                                         mesh_.vertices[static_cast<std::size_t>(tri[2])]);
      const double d2 = (p - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = p;
      }
    }
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  double dl = box_distance2(q, l.lo, l.hi), dr = box_distance2(q, r.lo, r.hi);
  int first = node.left, second = node.right;
  if (dr < dl) {
    std::swap(first, second);
    std::swap(dl, dr);
  }
  if (dl < best_d2) closest(first, q, best_d2, best);
  if (dr < best_d2) closest(second, q, best_d2, best);
}

double MeshSdf::winding(int index, const Vec3& q) const {
  const Node& node = nodes_[static_cast<std::size_t>(index)];
  const Vec3 r = node.centroid - q;
  const double dist = r.norm();
  if (dist > kFarField * node.radius) {
    return node.normal_sum.dot(r) / (dist * dist * dist);
  }
  if (node.left < 0) {
    double omega = 0.0;
    for (int k = node.first; k < node.first + node.count; ++k) {
      const auto& tri = mesh_.triangles[static_cast<std::size_t>(order_[static_cast<std::size_t>(k)])];
      omega += solid_angle(q, mesh_.vertices[static_cast<std::size_t>(tri[0])],
                           mesh_.vertices[static_cast<std::size_t>(tri[1])],
                           mesh_.vertices[static_cast<std::size_t>(tri[2])]);
    }
    return omega;
  }
  return winding(node.left, q) + winding(node.right, q);
}

Vec3 MeshSdf::closest_point(const Vec3& q) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  Vec3 best = Vec3::Zero();
  closest(0, q, best_d2, best);
  return best;
}

double MeshSdf::unsigned_distance(const Vec3& q) const { return (closest_point(q) - q).norm(); }

double MeshSdf::winding_number(const Vec3& q) const {
  return winding(0, q) / (4.0 * std::numbers::pi);
}

double MeshSdf::distance(const Vec3& q) const {
  const double d = unsigned_distance(q);
  return winding_number(q) > 0.5 ? -d : d;
}

namespace {

double sdf_of(const Sphere& s, const Vec3& q) { return q.norm() - s.radius; }

double sdf_of(const Box& b, const Vec3& q) {
  const Vec3 d = q.cwiseAbs() - b.half_extents;
  return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
}

double sdf_of(const Torus& t, const Vec3& q) {
  const double ring = std::hypot(q.x(), q.y()) - t.major;
  return std::hypot(ring, q.z()) - t.minor;
}

double sdf_of(const std::shared_ptr<const MeshSdf>& m, const Vec3& q) { return m->distance(q); }

Vec3 gaussian_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

}  // namespace

double SdfOracle::distance(const Vec3& q) const {
  return std::visit([&](const auto& k) { return sdf_of(k, q); }, kind_);
}

std::vector<double> SdfOracle::distances(std::span<const Vec3> queries, int workers) const {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), workers, [&](int, WorkRange r) {
    for (std::size_t j = r.begin; j < r.end; ++j) out[j] = distance(queries[j]);
  });
  return out;
}

std::vector<Vec3> SdfOracle::sample_surface(std::size_t n, std::mt19937_64& rng) const {
  std::vector<Vec3> out;
  out.reserve(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (const auto* s = std::get_if<Sphere>(&kind_)) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(s->radius * gaussian_direction(rng));
  } else if (const auto* b = std::get_if<Box>(&kind_)) {
    const Vec3& h = b->half_extents;
    // Face pairs normal to x, y, z, weighted by area.
    const double ax = h.y() * h.z(), ay = h.x() * h.z(), az = h.x() * h.y();
    const double total = ax + ay + az;
    for (std::size_t k = 0; k < n; ++k) {
      const double pick = u(rng) * total;
      const int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
      Vec3 p;
      for (int d = 0; d < 3; ++d) p[d] = (2.0 * u(rng) - 1.0) * h[d];
      p[axis] = u(rng) < 0.5 ? -h[axis] : h[axis];
      out.push_back(p);
    }
  } else if (const auto* t = std::get_if<Torus>(&kind_)) {
    // Area element is proportional to (R + r cos(phi)); rejection on phi.
    const double two_pi = 2.0 * std::numbers::pi;
    while (out.size() < n) {
      const double theta = two_pi * u(rng);
      const double phi = two_pi * u(rng);
      const double ring = t->major + t->minor * std::cos(phi);
      if (u(rng) * (t->major + t->minor) > ring) continue;
      out.emplace_back(ring * std::cos(theta), ring * std::sin(theta), t->minor * std::sin(phi));
    }
  } else {
    out = efg::sample_surface(std::get<3>(kind_)->mesh(), n, rng);
  }
  return out;
}

std::string SdfOracle::describe() const {
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  if (const auto* s = std::get_if<Sphere>(&kind_)) return "sphere:r=" + num(s->radius);
  if (const auto* b = std::get_if<Box>(&kind_)) {
    return "box:x=" + num(b->half_extents.x()) + ",y=" + num(b->half_extents.y()) +
           ",z=" + num(b->half_extents.z());
  }
  if (const auto* t = std::get_if<Torus>(&kind_)) return "torus:R=" + num(t->major) + ",r=" + num(t->minor);
  return "mesh:" + std::to_string(std::get<3>(kind_)->mesh().triangles.size()) + " triangles";
}

namespace {

double parse_number(std::string_view text, std::string_view spec) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw InputError("bad number '" + std::string(text) + "' in shape spec '" + std::string(spec) + "'");
  }
  return v;
}

template <class Fn>
void for_each_param(std::string_view params, std::string_view spec, Fn&& fn) {
  while (!params.empty()) {
    const auto comma = params.find(',');
    const std::string_view item = params.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("expected key=value in shape spec '" + std::string(spec) + "'");
    }
    fn(item.substr(0, eq), parse_number(item.substr(eq + 1), spec));
    if (comma == std::string_view::npos) break;
    params.remove_prefix(comma + 1);
  }
}

[[noreturn]] void unknown_key(std::string_view key, std::string_view spec) {
  throw InputError("unknown parameter '" + std::string(key) + "' in shape spec '" + std::string(spec) + "'");
}

}  // namespace

SdfOracle parse_shape(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view params = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  auto require_positive = [&](double v) {
    if (!(v > 0.0)) throw InputError("shape dimensions must be positive: '" + std::string(spec) + "'");
  };
  if (head == "sphere") {
    Sphere s;
    for_each_param(params, spec, [&](std::string_view k, double v) {
      if (k == "r") s.radius = v;
      else unknown_key(k, spec);
    });
    require_positive(s.radius);
    return SdfOracle(s);
  }
  if (head == "box") {
    Box b;
    for_each_param(params, spec, [&](std::string_view k, double v) {
      if (k == "h") b.half_extents = Vec3::Constant(v);
      else if (k == "x") b.half_extents.x() = v;
      else if (k == "y") b.half_extents.y() = v;
      else if (k == "z") b.half_extents.z() = v;
      else unknown_key(k, spec);
    });
    for (int d = 0; d < 3; ++d) require_positive(b.half_extents[d]);
    return SdfOracle(b);
  }
  if (head == "torus") {
    Torus t;
    for_each_param(params, spec, [&](std::string_view k, double v) {
      if (k == "R") t.major = v;
      else if (k == "r") t.minor = v;
      else unknown_key(k, spec);
    });
    require_positive(t.major);
    require_positive(t.minor);
    return SdfOracle(t);
  }
  std::string path(head == "mesh" ? params : spec);
  TriMesh mesh = load_obj(path);
  if (mesh.empty()) throw InputError("mesh file has no faces: " + path);
  normalize_to_domain(mesh);
  return SdfOracle(std::make_shared<const MeshSdf>(std::move(mesh)));
}

}  // namespace efg
