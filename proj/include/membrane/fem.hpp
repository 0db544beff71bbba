#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <vector>

#include "membrane/mesh.hpp"

namespace membrane {

using SpMat = Eigen::SparseMatrix<double>;

// Nodal coefficient vector of a P1 field, tied to its mesh.
struct FieldVec {
  const TriMesh* mesh = nullptr;
  Eigen::VectorXd values;

  FieldVec() = default;
  explicit FieldVec(const TriMesh& m)
      : mesh(&m), values(Eigen::VectorXd::Zero(m.n_vertices())) {}
  FieldVec(const TriMesh& m, Eigen::VectorXd v) : mesh(&m), values(std::move(v)) {}
  int size() const { return static_cast<int>(values.size()); }
};

struct RankOneTerm {
  Eigen::VectorXd factor;
  double weight = 1.0;
};

// Symmetric operator A = base + sum_k weight_k * b_k b_k^T.  The low-rank
// terms stay factored so application costs O(nnz + sum_k n); dense() is
// the explicit expansion used for small cross-check systems.
struct SparseSymMatrix {
  SpMat base;
  std::vector<RankOneTerm> rank_terms;

  SparseSymMatrix() = default;
  explicit SparseSymMatrix(int n) : base(n, n) {}
  explicit SparseSymMatrix(SpMat b) : base(std::move(b)) {}

  int size() const { return static_cast<int>(base.rows()); }
  void add_rank_one(Eigen::VectorXd b, double weight = 1.0) {
    rank_terms.push_back({std::move(b), weight});
  }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense() const;
};

// alpha*A + beta*B; factored terms are concatenated with scaled weights.
SparseSymMatrix combine(double alpha, const SparseSymMatrix& A, double beta,
                        const SparseSymMatrix& B);

// Scalar function evaluated at points of the exact surface (integrands are
// lifted there by the closest-point map before evaluation).
using SurfaceFn = std::function<double(const Vec3&)>;

SpMat assemble_mass(const TriMesh& m);
SpMat assemble_stiffness(const TriMesh& m);

// (phi_i, g∘p)_{L2(Gamma_h)} by the 3-point mid-edge rule (degree-2 exact).
Eigen::VectorXd moment_vector(const TriMesh& m, const SurfaceFn& g);

// sum_k weight * b_k b_k^T with b_k the moment vector of fields[k].
SparseSymMatrix assemble_rank_one(const TriMesh& m,
                                  const std::vector<SurfaceFn>& fields,
                                  double weight = 1.0);

// sum_k e_k e_k^T with (e_k)_i = phi_i at locate(points[k]).
SparseSymMatrix assemble_point_matrix(const TriMesh& m,
                                      const std::vector<Vec3>& points);

// Curvature-correction form of the second variation: for each element,
//   grad(phi_i) . [ (3/2 H^2 - 2|shape|^2 - 2) I - 2 H shape ] grad(phi_j)
// + phi_i phi_j [ -3/2 H^2 |shape|^2 + 2 hessH:shape + |gradH|^2
//                 + 2 H tr(shape^3) + lap|shape|^2 + |shape|^4 - 1 ],
// coefficients evaluated at lifted quadrature points.
SpMat assemble_curvature_form(const TriMesh& m);

// Point-force load vector on the sphere with the analytic compatibility
// corrections:  F_i = sum_k beta_k [ phi_i(lift of X_k)
//   - (1/4 pi R^2)(phi_i, 1) - (3/4 pi R^2) sum_r nu_r(X_k)(phi_i, nu_r∘p) ].
Eigen::VectorXd point_load_vector(const TriMesh& m,
                                  const std::vector<Vec3>& points,
                                  const Eigen::VectorXd& beta);

// (F~)_i = sum_k alpha_k phi_i(lift of X_k); no corrections.
Eigen::VectorXd point_value_rhs(const TriMesh& m,
                                const std::vector<Vec3>& points,
                                const Eigen::VectorXd& alpha);

double evaluate(const TriMesh& m, const Eigen::VectorXd& u, const Vec3& x);
Eigen::VectorXd interpolate(const TriMesh& m, const ParamField& f);
double l2_inner(const SpMat& mass, const Eigen::VectorXd& u,
                const Eigen::VectorXd& v);
double l2_norm(const SpMat& mass, const Eigen::VectorXd& u);

}  // namespace membrane
