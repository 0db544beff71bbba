#include "membrane/fem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace membrane {

namespace {

struct ElementFrame {
  Vec3 v0, v1, v2;
  double area;
  Vec3 grad[3];     // P1 shape-function gradients (constant per element)
  Vec3 midpoint[3]; // mid-edge quadrature nodes (opposite vertex order)
};

ElementFrame element_frame(const TriMesh& m, int t) {
  const auto& tri = m.triangles[t];
  ElementFrame e;
  e.v0 = m.vertices[tri[0]];
  e.v1 = m.vertices[tri[1]];
  e.v2 = m.vertices[tri[2]];
  const Vec3 n2 = (e.v1 - e.v0).cross(e.v2 - e.v0);
  const double n2n = n2.norm();
  e.area = 0.5 * n2n;
  if (!(e.area > 0.0)) throw std::runtime_error("degenerate triangle in assembly");
  const Vec3 n = n2 / n2n;
  e.grad[0] = n.cross(e.v2 - e.v1) / (2.0 * e.area);
  e.grad[1] = n.cross(e.v0 - e.v2) / (2.0 * e.area);
  e.grad[2] = n.cross(e.v1 - e.v0) / (2.0 * e.area);
  e.midpoint[0] = 0.5 * (e.v1 + e.v2);  // phi_0 = 0 here
  e.midpoint[1] = 0.5 * (e.v0 + e.v2);
  e.midpoint[2] = 0.5 * (e.v0 + e.v1);
  return e;
}

// Value of shape function i at mid-edge node q: 0 if i == q, else 1/2.
inline double midedge_phi(int i, int q) { return i == q ? 0.0 : 0.5; }

}  // namespace

Eigen::VectorXd SparseSymMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = base * x;
  for (const auto& rt : rank_terms) y += (rt.weight * rt.factor.dot(x)) * rt.factor;
  return y;
}

Eigen::MatrixXd SparseSymMatrix::dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd(base);
  for (const auto& rt : rank_terms)
    d += rt.weight * (rt.factor * rt.factor.transpose());
  return d;
}

SparseSymMatrix combine(double alpha, const SparseSymMatrix& A, double beta,
                        const SparseSymMatrix& B) {
  if (A.size() != B.size()) throw std::invalid_argument("size mismatch in combine");
  SparseSymMatrix out;
  out.base = alpha * A.base + beta * B.base;
  out.rank_terms.reserve(A.rank_terms.size() + B.rank_terms.size());
  for (const auto& rt : A.rank_terms)
    out.rank_terms.push_back({rt.factor, alpha * rt.weight});
  for (const auto& rt : B.rank_terms)
    out.rank_terms.push_back({rt.factor, beta * rt.weight});
  return out;
}

SpMat assemble_mass(const TriMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.n_triangles()) * 9);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double a = m.triangle_area(t);
    if (!(a > 0.0)) throw std::runtime_error("degenerate triangle in assembly");
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(tri[i], tri[j], i == j ? a / 6.0 : a / 12.0);
  }
  SpMat M(m.n_vertices(), m.n_vertices());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SpMat assemble_stiffness(const TriMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.n_triangles()) * 9);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementFrame e = element_frame(m, t);
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(tri[i], tri[j], e.area * e.grad[i].dot(e.grad[j]));
  }
  SpMat S(m.n_vertices(), m.n_vertices());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

Eigen::VectorXd moment_vector(const TriMesh& m, const SurfaceFn& g) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementFrame e = element_frame(m, t);
    const auto& tri = m.triangles[t];
    const double w = e.area / 3.0;
    for (int q = 0; q < 3; ++q) {
      const double gv = g(closest_point(m.surface, e.midpoint[q]));
      for (int i = 0; i < 3; ++i) b[tri[i]] += w * midedge_phi(i, q) * gv;
    }
  }
  return b;
}

SparseSymMatrix assemble_rank_one(const TriMesh& m,
                                  const std::vector<SurfaceFn>& fields,
                                  double weight) {
  SparseSymMatrix A(m.n_vertices());
  for (const auto& f : fields) A.add_rank_one(moment_vector(m, f), weight);
  return A;
}

SparseSymMatrix assemble_point_matrix(const TriMesh& m,
                                      const std::vector<Vec3>& points) {
  SparseSymMatrix C(m.n_vertices());
  for (const Vec3& x : points) {
    const MeshLocation loc = locate(m, x);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m.n_vertices());
    for (int k = 0; k < 3; ++k) e[m.triangles[loc.triangle][k]] = loc.bary[k];
    C.add_rank_one(std::move(e), 1.0);
  }
  return C;
}

SpMat assemble_curvature_form(const TriMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m.n_triangles()) * 9);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const ElementFrame e = element_frame(m, t);
    const auto& tri = m.triangles[t];
    Eigen::Matrix3d elem = Eigen::Matrix3d::Zero();
    for (int q = 0; q < 3; ++q) {
      const Vec3 p = closest_point(m.surface, e.midpoint[q]);
      const CurvatureData c = curvature(m.surface, p);
      const double H = c.h_mean, nsq = c.shape_norm_sq;
      const Mat3 coef = (1.5 * H * H - 2.0 * nsq - 2.0) * Mat3::Identity() -
                        2.0 * H * c.shape;
      const double c0 = -1.5 * H * H * nsq + 2.0 * c.hess_h_shape +
                        c.grad_h_sq + 2.0 * H * c.shape_tr3 +
                        c.lap_shape_norm_sq + nsq * nsq - 1.0;
      const double w = e.area / 3.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          elem(i, j) += w * (e.grad[i].dot(coef * e.grad[j]) +
                             c0 * midedge_phi(i, q) * midedge_phi(j, q));
    }
    // Symmetrize away the round-off skew so the assembled matrix is
    // exactly symmetric.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(tri[i], tri[j], 0.5 * (elem(i, j) + elem(j, i)));
  }
  SpMat T(m.n_vertices(), m.n_vertices());
  T.setFromTriplets(trip.begin(), trip.end());
  return T;
}

Eigen::VectorXd point_load_vector(const TriMesh& m,
                                  const std::vector<Vec3>& points,
                                  const Eigen::VectorXd& beta) {
  if (m.surface.kind != SurfaceKind::Sphere)
    throw std::invalid_argument("point loads are a sphere-problem construct");
  if (static_cast<int>(points.size()) != beta.size())
    throw std::invalid_argument("load point/magnitude count mismatch");

  const double R = m.surface.radius;
  const double inv_area = 1.0 / (4.0 * std::numbers::pi * R * R);

  Eigen::VectorXd F = Eigen::VectorXd::Zero(m.n_vertices());
  double lam0 = 0.0;
  Vec3 lam{0.0, 0.0, 0.0};
  for (size_t k = 0; k < points.size(); ++k) {
    const MeshLocation loc = locate(m, points[k]);
    for (int i = 0; i < 3; ++i)
      F[m.triangles[loc.triangle][i]] += beta[k] * loc.bary[i];
    lam0 += beta[k] * inv_area;
    lam += 3.0 * beta[k] * inv_area * normal(m.surface, points[k]);
  }
  const Eigen::VectorXd b0 = moment_vector(m, [](const Vec3&) { return 1.0; });
  F -= lam0 * b0;
  for (int r = 0; r < 3; ++r) {
    const Eigen::VectorXd br = moment_vector(
        m, [&, r](const Vec3& p) { return normal(m.surface, p)[r]; });
    F -= lam[r] * br;
  }
  return F;
}

Eigen::VectorXd point_value_rhs(const TriMesh& m,
                                const std::vector<Vec3>& points,
                                const Eigen::VectorXd& alpha) {
  if (static_cast<int>(points.size()) != alpha.size())
    throw std::invalid_argument("constraint point/target count mismatch");
  Eigen::VectorXd F = Eigen::VectorXd::Zero(m.n_vertices());
  for (size_t k = 0; k < points.size(); ++k) {
    const MeshLocation loc = locate(m, points[k]);
    for (int i = 0; i < 3; ++i)
      F[m.triangles[loc.triangle][i]] += alpha[k] * loc.bary[i];
  }
  return F;
}

double evaluate(const TriMesh& m, const Eigen::VectorXd& u, const Vec3& x) {
  const MeshLocation loc = locate(m, x);
  double v = 0.0;
  for (int k = 0; k < 3; ++k)
    v += loc.bary[k] * u[m.triangles[loc.triangle][k]];
  return v;
}

Eigen::VectorXd interpolate(const TriMesh& m, const ParamField& f) {
  Eigen::VectorXd v(m.n_vertices());
  for (int i = 0; i < m.n_vertices(); ++i)
    v[i] = field_value(m.surface, f, m.vertices[i]);
  return v;
}

double l2_inner(const SpMat& mass, const Eigen::VectorXd& u,
                const Eigen::VectorXd& v) {
  return u.dot(mass * v);
}

double l2_norm(const SpMat& mass, const Eigen::VectorXd& u) {
  return std::sqrt(std::max(0.0, l2_inner(mass, u, u)));
}

}  // namespace membrane
