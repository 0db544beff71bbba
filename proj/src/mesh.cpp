#include "membrane/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace membrane {

namespace {

constexpr double kGolden = 1.6180339887498948482;

const std::array<Vec3, 12>& icosahedron_vertices() {
  static const std::array<Vec3, 12> v = {
      Vec3{-1, kGolden, 0},  Vec3{1, kGolden, 0},  Vec3{-1, -kGolden, 0},
      Vec3{1, -kGolden, 0},  Vec3{0, -1, kGolden}, Vec3{0, 1, kGolden},
      Vec3{0, -1, -kGolden}, Vec3{0, 1, -kGolden}, Vec3{kGolden, 0, -1},
      Vec3{kGolden, 0, 1},   Vec3{-kGolden, 0, -1}, Vec3{-kGolden, 0, 1}};
  return v;
}

const std::array<std::array<int, 3>, 20>& icosahedron_faces() {
  static const std::array<std::array<int, 3>, 20> f = {{{0, 11, 5},
                                                        {0, 5, 1},
                                                        {0, 1, 7},
                                                        {0, 7, 10},
                                                        {0, 10, 11},
                                                        {1, 5, 9},
                                                        {5, 11, 4},
                                                        {11, 10, 2},
                                                        {10, 7, 6},
                                                        {7, 1, 8},
                                                        {3, 9, 4},
                                                        {3, 4, 2},
                                                        {3, 2, 6},
                                                        {3, 6, 8},
                                                        {3, 8, 9},
                                                        {4, 9, 5},
                                                        {2, 4, 11},
                                                        {6, 2, 10},
                                                        {8, 6, 7},
                                                        {9, 8, 1}}};
  return f;
}

}  // namespace

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

Vec3 TriMesh::triangle_normal(int t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return e1.cross(e2).normalized();
}

double TriMesh::area() const {
  double a = 0.0;
  for (int t = 0; t < n_triangles(); ++t) a += triangle_area(t);
  return a;
}

double TriMesh::max_edge_length() const {
  double h = 0.0;
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k)
      h = std::max(h, (vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
  return h;
}

int TriMesh::euler_characteristic() const {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  return n_vertices() - static_cast<int>(edges.size()) + n_triangles();
}

void TriMesh::validate() const {
  const double scale = surface.radius;
  for (int i = 0; i < n_vertices(); ++i)
    if ((closest_point(surface, vertices[i]) - vertices[i]).norm() >
        1e-12 * scale)
      throw std::runtime_error("mesh vertex " + std::to_string(i) +
                               " is off the surface");

  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : triangles) {
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::runtime_error("degenerate triangle");
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (a < 0 || a >= n_vertices() || b < 0 || b >= n_vertices())
        throw std::runtime_error("triangle vertex index out of range");
      if (++directed[{a, b}] > 1)
        throw std::runtime_error("duplicate directed edge; orientation broken");
    }
  }
  for (const auto& [e, cnt] : directed)
    if (!directed.count({e.second, e.first}))
      throw std::runtime_error("boundary edge found; mesh is not closed");

  const int expected = surface.kind == SurfaceKind::Sphere ? 2 : 0;
  if (euler_characteristic() != expected)
    throw std::runtime_error("unexpected Euler characteristic");

  for (int t = 0; t < n_triangles(); ++t) {
    if (!(triangle_area(t) > 0.0))
      throw std::runtime_error("zero-area triangle");
    const auto& tri = triangles[t];
    const Vec3 c =
        (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
    if (triangle_normal(t).dot(normal(surface, closest_point(surface, c))) <=
        0.0)
      throw std::runtime_error("triangle " + std::to_string(t) +
                               " is not outward oriented");
  }
}

TriMesh build_sphere(const SurfaceSpec& s, int level) {
  s.validate();
  if (s.kind != SurfaceKind::Sphere)
    throw std::invalid_argument("build_sphere requires a sphere spec");
  if (level < 0 || level > 8)
    throw std::invalid_argument("sphere subdivision level must be in 0..8");

  TriMesh m;
  m.surface = s;
  m.level = 0;
  for (const Vec3& v : icosahedron_vertices())
    m.vertices.push_back(s.radius * v.normalized());
  for (const auto& f : icosahedron_faces()) m.triangles.push_back(f);
  for (int l = 0; l < level; ++l) m = refine(m);
  return m;
}

TriMesh build_torus(const SurfaceSpec& s, int n_theta, int n_phi) {
  s.validate();
  if (s.kind != SurfaceKind::CliffordTorus)
    throw std::invalid_argument("build_torus requires a torus spec");
  if (n_theta < 3 || n_phi < 3)
    throw std::invalid_argument("torus grid needs at least 3x3 cells");

  TriMesh m;
  m.surface = s;
  m.level = 0;
  const double two_pi = 2.0 * std::numbers::pi;
  m.vertices.reserve(static_cast<size_t>(n_theta) * n_phi);
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j)
      m.vertices.push_back(
          surface_point(s, two_pi * i / n_theta, two_pi * j / n_phi));

  auto vid = [&](int i, int j) {
    return ((i + n_theta) % n_theta) * n_phi + ((j + n_phi) % n_phi);
  };
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1),
                d = vid(i, j + 1);
      const double len_ac = (m.vertices[a] - m.vertices[c]).norm();
      const double len_bd = (m.vertices[b] - m.vertices[d]).norm();
      // Quad orientation (a,b,c,d) follows (theta, phi), which is inward
      // for this parametrization, so the triangles are emitted reversed.
      if (len_ac <= len_bd + 1e-12 * s.radius) {
        m.triangles.push_back({a, c, b});
        m.triangles.push_back({a, d, c});
      } else {
        m.triangles.push_back({a, d, b});
        m.triangles.push_back({b, d, c});
      }
    }
  return m;
}

TriMesh refine(const TriMesh& mesh) {
  TriMesh out;
  out.surface = mesh.surface;
  out.level = mesh.level + 1;
  out.vertices = mesh.vertices;
  out.triangles.reserve(mesh.triangles.size() * 4);

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(closest_point(
        mesh.surface, 0.5 * (mesh.vertices[a] + mesh.vertices[b])));
    midpoint.emplace(key, idx);
    return idx;
  };

  for (const auto& tri : mesh.triangles) {
    const int m01 = mid(tri[0], tri[1]);
    const int m12 = mid(tri[1], tri[2]);
    const int m02 = mid(tri[0], tri[2]);
    out.triangles.push_back({tri[0], m01, m02});
    out.triangles.push_back({tri[1], m12, m01});
    out.triangles.push_back({tri[2], m02, m12});
    out.triangles.push_back({m01, m12, m02});
  }
  return out;
}

MeshLocation locate(const TriMesh& mesh, const Vec3& x) {
  const Vec3 nu = normal(mesh.surface, x);
  // Intersections farther than the local reach belong to other sheets
  // (e.g. the antipodal side of the sphere) and are rejected.
  const double t_max = 0.9 * mesh.surface.radius;

  MeshLocation best;
  double best_t = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& v0 = mesh.vertices[tri[0]];
    const Vec3 e1 = mesh.vertices[tri[1]] - v0;
    const Vec3 e2 = mesh.vertices[tri[2]] - v0;
    const Vec3 pv = nu.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-300) continue;
    const Vec3 tv = x - v0;
    const double u = tv.dot(pv) / det;
    const Vec3 qv = tv.cross(e1);
    const double v = nu.dot(qv) / det;
    const double dist = e2.dot(qv) / det;
    const double tol = 1e-9;
    if (u < -tol || v < -tol || u + v > 1.0 + tol) continue;
    if (std::abs(dist) >= t_max) continue;
    if (std::abs(dist) < best_t - 1e-12 * mesh.surface.radius) {
      best_t = std::abs(dist);
      best.triangle = t;
      const double w0 = std::clamp(1.0 - u - v, 0.0, 1.0);
      const double w1 = std::clamp(u, 0.0, 1.0);
      const double w2 = std::clamp(v, 0.0, 1.0);
      const double sum = w0 + w1 + w2;
      best.bary = {w0 / sum, w1 / sum, w2 / sum};
    }
  }
  if (best.triangle < 0)
    throw std::runtime_error("locate: point is not covered by the mesh lift");
  return best;
}

Vec3 location_point(const TriMesh& mesh, const MeshLocation& loc) {
  const auto& tri = mesh.triangles[loc.triangle];
  return loc.bary[0] * mesh.vertices[tri[0]] +
         loc.bary[1] * mesh.vertices[tri[1]] +
         loc.bary[2] * mesh.vertices[tri[2]];
}

}  // namespace membrane
