#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "membrane/solve.hpp"

using namespace membrane;

namespace {

SurfaceSpec sphere(double R = 1.0) {
  SurfaceSpec s;
  s.kind = SurfaceKind::Sphere;
  s.radius = R;
  return s;
}

Eigen::VectorXd randn(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Stabilized sphere operator S + tau * b0 b0^T: SPD (the rank-one term
// plugs the constant null space), with a genuinely factored low-rank part.
SparseSymMatrix stabilized_operator(const TriMesh& m, double tau) {
  SparseSymMatrix A(assemble_stiffness(m));
  A.add_rank_one(moment_vector(m, [](const Vec3&) { return 1.0; }), tau);
  return A;
}

}  // namespace

TEST_CASE("factored and explicit paths agree") {
  const TriMesh m = build_sphere(sphere(1.0), 2);
  const SparseSymMatrix A = stabilized_operator(m, 0.5);
  const Eigen::VectorXd rhs = randn(m.n_vertices(), 11);

  SolveOptions fo;
  fo.path = SolvePath::Factored;
  SolveOptions eo;
  eo.path = SolvePath::Explicit;

  SolveReport rf, re;
  const Eigen::VectorXd xf = FactorizedSolver(A, fo).solve(rhs, &rf);
  const Eigen::VectorXd xe = FactorizedSolver(A, eo).solve(rhs, &re);
  CHECK((xf - xe).norm() <= 1e-12 * xe.norm());
  CHECK(rf.n == m.n_vertices());
  CHECK(re.n == m.n_vertices());
  CHECK(rf.rel_residual <= 1e-10);
  CHECK(re.rel_residual <= 1e-10);
  CHECK(!rf.method.empty());
  CHECK(rf.method != re.method);

  // residual of the returned solution against the operator itself
  CHECK((A.apply(xf) - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("auto path solves pure-sparse SPD systems") {
  const TriMesh m = build_sphere(sphere(1.0), 2);
  SpMat M = assemble_mass(m);
  const Eigen::VectorXd rhs = randn(m.n_vertices(), 13);
  auto [x, rep] = solve_spd(SparseSymMatrix(M), rhs);
  CHECK((M * x - rhs).norm() <= 1e-11 * rhs.norm());
  CHECK(rep.rel_residual <= 1e-11);
  CHECK(rep.seconds >= 0.0);
}

TEST_CASE("singular operator is reported with its near-null direction") {
  const TriMesh m = build_sphere(sphere(1.0), 2);
  // raw stiffness: constants in the kernel
  const SparseSymMatrix S(assemble_stiffness(m));
  bool threw = false;
  try {
    FactorizedSolver solver(S);
    (void)solver.solve(randn(m.n_vertices(), 17));
  } catch (const SolverError& e) {
    threw = true;
    const Eigen::VectorXd& z = e.near_null();
    REQUIRE(z.size() == m.n_vertices());
    CHECK(z.norm() == doctest::Approx(1.0).epsilon(1e-8));
    // direction is essentially constant: tiny variance after normalization
    const double mean = z.mean();
    CHECK((z.array() - mean).matrix().norm() <= 1e-4);
  }
  CHECK(threw);
}

TEST_CASE("rank-one update changes the solution, not just the residual") {
  // (M + b b^T) x = b has solution b-direction shrunk by the update;
  // verified against the dense expansion.
  const TriMesh m = build_sphere(sphere(1.0), 1);
  SparseSymMatrix A(assemble_mass(m));
  const Eigen::VectorXd b = randn(m.n_vertices(), 19).normalized();
  A.add_rank_one(b, 2.0);
  const Eigen::VectorXd rhs = randn(m.n_vertices(), 23);
  auto [x, rep] = solve_spd(A, rhs);
  const Eigen::MatrixXd D = A.dense();
  const Eigen::VectorXd xd = D.ldlt().solve(rhs);
  CHECK((x - xd).norm() <= 1e-11 * xd.norm());
}

TEST_CASE("negative-weight rank terms are handled by the bordered path") {
  const int n = 30;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 3.0 + 0.05 * i);
  SpMat base(n, n);
  base.setFromTriplets(trip.begin(), trip.end());
  SparseSymMatrix A(base);
  A.add_rank_one(randn(n, 29).normalized(), -0.8);
  A.add_rank_one(randn(n, 31).normalized(), 1.7);
  const Eigen::VectorXd rhs = randn(n, 37);
  auto [x, rep] = solve_spd(A, rhs);
  CHECK((A.dense() * x - rhs).norm() <= 1e-11 * rhs.norm());
}

TEST_CASE("symmetric block systems against a manufactured solution") {
  const TriMesh m = build_sphere(sphere(1.0), 1);
  const int n = m.n_vertices();
  const SpMat S = assemble_stiffness(m);
  const SpMat M = assemble_mass(m);

  SparseSymMatrix A11(S);
  A11.add_rank_one(moment_vector(m, [](const Vec3&) { return 1.0; }), 3.0);
  const SpMat A12 = SpMat(S + M);
  SparseSymMatrix A22(SpMat(-M));

  const Eigen::VectorXd x1 = randn(n, 41), x2 = randn(n, 43);
  const Eigen::VectorXd b1 = A11.apply(x1) + A12 * x2;
  const Eigen::VectorXd b2 = A12.transpose() * x1 + A22.apply(x2);

  const BlockSolution sol = solve_block_sym(A11, A12, A22, b1, b2);
  CHECK((sol.x1 - x1).norm() <= 1e-9 * x1.norm());
  CHECK((sol.x2 - x2).norm() <= 1e-9 * x2.norm());
  CHECK(sol.report.n == 2 * n);
  CHECK(sol.report.rel_residual <= 1e-9);

  // join_blocks applies the same operator
  const SparseSymMatrix J = join_blocks(A11, A12, A22);
  Eigen::VectorXd xy(2 * n);
  xy << x1, x2;
  Eigen::VectorXd b(2 * n);
  b << b1, b2;
  CHECK((J.apply(xy) - b).norm() <= 1e-11 * b.norm());
}

TEST_CASE("generalized eigenvalues: diagonal pencil is exact") {
  const int n = 50;
  std::vector<Eigen::Triplet<double>> st, mt;
  for (int i = 0; i < n; ++i) {
    st.emplace_back(i, i, double(i + 1));
    mt.emplace_back(i, i, 1.0);
  }
  SpMat S(n, n), M(n, n);
  S.setFromTriplets(st.begin(), st.end());
  M.setFromTriplets(mt.begin(), mt.end());
  Eigen::MatrixXd vecs;
  const Eigen::VectorXd ev = smallest_eigenvalues(S, M, 5, 1e-11, &vecs);
  REQUIRE(ev.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(ev[i] == doctest::Approx(double(i + 1)).epsilon(1e-8));
  REQUIRE(vecs.cols() == 5);
  // eigenvectors are M-orthonormal and satisfy the pencil equation (vector
  // residuals trail the eigenvalue accuracy by a few orders)
  for (int i = 0; i < 5; ++i) {
    CHECK((S * vecs.col(i) - ev[i] * (M * vecs.col(i))).norm() <= 1e-5);
    for (int j = 0; j <= i; ++j)
      CHECK(vecs.col(i).dot(M * vecs.col(j)) ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
  }
}

TEST_CASE("generalized eigenvalues: surface laplacian spectrum") {
  // l(l+1)/R^2 with multiplicities 1, 3, 5 for the sphere
  const double R = 1.0;
  const TriMesh m = build_sphere(sphere(R), 3);
  const SpMat S = assemble_stiffness(m);
  const SpMat M = assemble_mass(m);
  const Eigen::VectorXd ev = smallest_eigenvalues(S, M, 9, 1e-9);
  REQUIRE(ev.size() == 9);
  CHECK(std::abs(ev[0]) <= 1e-8);
  for (int i = 1; i <= 3; ++i)
    CHECK(ev[i] == doctest::Approx(2.0 / (R * R)).epsilon(0.02));
  for (int i = 4; i <= 8; ++i)
    CHECK(ev[i] == doctest::Approx(6.0 / (R * R)).epsilon(0.03));
  // ascending order
  for (int i = 1; i < 9; ++i) CHECK(ev[i] >= ev[i - 1] - 1e-12);
}

TEST_CASE("solver reports carry the system size and timing") {
  const TriMesh m = build_sphere(sphere(1.0), 2);
  const SparseSymMatrix A = stabilized_operator(m, 1.0);
  SolveReport rep;
  const FactorizedSolver solver(A);
  const Eigen::VectorXd x = solver.solve(randn(m.n_vertices(), 47), &rep);
  CHECK(rep.n == m.n_vertices());
  CHECK(rep.seconds >= 0.0);
  CHECK(rep.refinement_steps >= 0);
  CHECK(!solver.method().empty());

  // repeatable back-solves from one factorization
  const Eigen::VectorXd rhs2 = randn(m.n_vertices(), 53);
  const Eigen::VectorXd a = solver.solve(rhs2);
  const Eigen::VectorXd b = solver.solve(rhs2);
  CHECK((a - b).norm() == 0.0);
}
