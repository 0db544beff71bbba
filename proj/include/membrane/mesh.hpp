#pragma once

#include <array>
#include <vector>

#include "membrane/geometry.hpp"

namespace membrane {

// Position on the mesh: triangle index plus barycentric coordinates.
struct MeshLocation {
  int triangle = -1;
  std::array<double, 3> bary{0.0, 0.0, 0.0};
};

// Triangulated approximation of the reference surface.  Vertices lie on
// the exact surface and triangles are oriented so their normals point
// outward, matching the closest-point lift used for assembly.
struct TriMesh {
  SurfaceSpec surface;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  int level = 0;  // refinement generation

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  Vec3 triangle_normal(int t) const;  // unit, from vertex order
  double area() const;
  double max_edge_length() const;
  int euler_characteristic() const;

  // Structural checks: vertices on surface, closed oriented 2-manifold,
  // outward orientation, expected Euler characteristic.  Throws
  // std::runtime_error with a description on the first failure.
  void validate() const;
};

// Icosahedral sphere mesh, `level` midpoint subdivisions (0..8).
TriMesh build_sphere(const SurfaceSpec& s, int level);

// Structured torus mesh on an n_theta x n_phi parameter grid (each >= 3).
// Quads are split along the diagonal of shorter 3D length; ties pick the
// diagonal through the quad's first corner.
TriMesh build_torus(const SurfaceSpec& s, int n_theta, int n_phi);

// One sweep of 1:4 midpoint refinement; midpoints are projected to the
// surface with the closest-point map.
TriMesh refine(const TriMesh& mesh);

// Inverse of the closest-point lift: the unique mesh point x_h whose
// surface projection equals x (x must be on the surface).  Among
// intersections of the normal line with the mesh, picks the one closest
// to the surface; exact ties resolve to the smallest triangle index.
MeshLocation locate(const TriMesh& mesh, const Vec3& x);

Vec3 location_point(const TriMesh& mesh, const MeshLocation& loc);

}  // namespace membrane
