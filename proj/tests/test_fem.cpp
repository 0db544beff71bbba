#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "membrane/fem.hpp"

using namespace membrane;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceSpec sphere(double R = 1.0) {
  SurfaceSpec s;
  s.kind = SurfaceKind::Sphere;
  s.radius = R;
  return s;
}

SurfaceSpec torus(double R = 1.0) {
  SurfaceSpec s;
  s.kind = SurfaceKind::CliffordTorus;
  s.radius = R;
  return s;
}

double max_abs_coeff(const SpMat& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

TEST_CASE("mass and stiffness basics") {
  const TriMesh m = build_sphere(sphere(1.3), 2);
  const SpMat M = assemble_mass(m);
  const SpMat S = assemble_stiffness(m);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_vertices());

  // constants are in the stiffness kernel
  CHECK((S * ones).lpNorm<Eigen::Infinity>() <= 1e-12);
  // total mass equals the mesh area
  CHECK(ones.dot(M * ones) == doctest::Approx(m.area()).epsilon(1e-13));
  // both are symmetric to round-off
  CHECK(max_abs_coeff(SpMat((M - SpMat(M.transpose())).pruned())) <= 1e-15);
  CHECK(max_abs_coeff(SpMat((S - SpMat(S.transpose())).pruned())) <= 1e-12);
  // M is positive definite: x^T M x > 0 for a few random x
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd x(m.n_vertices());
    for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
    CHECK(x.dot(M * x) > 0.0);
    CHECK(x.dot(S * x) >= -1e-12);
  }
}

TEST_CASE("interpolated height field reproduces Dirichlet and mass values") {
  // On the unit sphere with z = nu_3:  int |grad z|^2 = 8 pi / 3,
  // int z^2 = 4 pi / 3; both are approximated at second order.
  const SurfaceSpec s = sphere(1.0);
  const ParamField z = normal_component_field(s, 2);
  double err_dir[2], err_mass[2];
  int idx = 0;
  for (int level : {2, 4}) {
    const TriMesh m = build_sphere(s, level);
    const Eigen::VectorXd u = interpolate(m, z);
    const SpMat S = assemble_stiffness(m);
    const SpMat M = assemble_mass(m);
    err_dir[idx] = std::abs(u.dot(S * u) - 8 * kPi / 3);
    err_mass[idx] = std::abs(u.dot(M * u) - 4 * kPi / 3);
    ++idx;
  }
  CHECK(err_dir[1] <= 0.01 * (8 * kPi / 3));
  CHECK(err_mass[1] <= 0.01 * (4 * kPi / 3));
  // two refinement levels should shrink the error by ~16; ask for 8
  CHECK(err_dir[0] >= 8 * err_dir[1]);
  CHECK(err_mass[0] >= 8 * err_mass[1]);
}

TEST_CASE("moment vector of the constant equals the mass row sums") {
  for (const SurfaceSpec& s : {sphere(1.0), torus(1.0)}) {
    const TriMesh m = s.kind == SurfaceKind::Sphere
                          ? build_sphere(s, 2)
                          : build_torus(s, 12, 24);
    const Eigen::VectorXd b0 =
        moment_vector(m, [](const Vec3&) { return 1.0; });
    const SpMat M = assemble_mass(m);
    const Eigen::VectorXd rows = M * Eigen::VectorXd::Ones(m.n_vertices());
    CHECK((b0 - rows).lpNorm<Eigen::Infinity>() <=
          1e-14 * rows.lpNorm<Eigen::Infinity>());
    CHECK(b0.sum() == doctest::Approx(m.area()).epsilon(1e-13));
  }
}

TEST_CASE("normal moments vanish on the centrally symmetric sphere mesh") {
  const SurfaceSpec s = sphere(1.0);
  const TriMesh m = build_sphere(s, 3);
  for (int r = 0; r < 3; ++r) {
    const Eigen::VectorXd br = moment_vector(
        m, [&, r](const Vec3& p) { return normal(s, p)[r]; });
    // exact zero by symmetry; round-off in summation only
    CHECK(std::abs(br.sum()) <= 1e-12 * m.area());
  }
  // and the moment of nu_3^2 integrates the lifted square
  const Eigen::VectorXd b =
      moment_vector(m, [&](const Vec3& p) {
        const double v = normal(s, p)[2];
        return v * v;
      });
  CHECK(b.sum() == doctest::Approx(4 * kPi / 3).epsilon(0.01));
}

TEST_CASE("point load vector: compatibility sum and linearity") {
  const double R = 1.0;
  const SurfaceSpec s = sphere(R);
  const TriMesh m = build_sphere(s, 3);
  const std::vector<Vec3> pts = {Vec3(0, 0, R),
                                 surface_point(s, 1.2, 0.7)};
  Eigen::VectorXd beta(2);
  beta << 5.0, -3.0;

  const Eigen::VectorXd F = point_load_vector(m, pts, beta);
  // summing the rows kills the point part up to the area defect
  const double expected = beta.sum() * (1.0 - m.area() / (4 * kPi * R * R));
  CHECK(F.sum() == doctest::Approx(expected).epsilon(1e-10));

  Eigen::VectorXd b1(2), b2(2);
  b1 << 5.0, 0.0;
  b2 << 0.0, -3.0;
  const Eigen::VectorXd Fsplit =
      point_load_vector(m, pts, b1) + point_load_vector(m, pts, b2);
  CHECK((F - Fsplit).lpNorm<Eigen::Infinity>() <=
        1e-13 * F.lpNorm<Eigen::Infinity>());

  // preconditions
  const TriMesh tm = build_torus(torus(1.0), 8, 16);
  CHECK_THROWS_AS((void)point_load_vector(tm, pts, beta),
                  std::invalid_argument);
  Eigen::VectorXd bad(1);
  bad << 1.0;
  CHECK_THROWS_AS((void)point_load_vector(m, pts, bad),
                  std::invalid_argument);
}

TEST_CASE("point value rhs places barycentric weights") {
  const SurfaceSpec s = torus(1.0);
  const TriMesh m = build_torus(s, 10, 20);
  const Vec3 x = surface_point(s, 0.9, 2.3);
  Eigen::VectorXd alpha(1);
  alpha << 2.5;
  const Eigen::VectorXd F = point_value_rhs(m, {x}, alpha);
  CHECK(F.sum() == doctest::Approx(2.5).epsilon(1e-12));
  // nonzeros confined to one triangle's vertices
  CHECK((F.array() != 0.0).count() <= 3);
  // pairing with a coefficient vector evaluates the field at the point
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(m.n_vertices());
  for (int i = 0; i < u.size(); ++i) u[i] = g(rng);
  CHECK(F.dot(u) == doctest::Approx(2.5 * evaluate(m, u, x)).epsilon(1e-12));
}

TEST_CASE("point matrix application matches pointwise evaluation") {
  const SurfaceSpec s = sphere(1.0);
  const TriMesh m = build_sphere(s, 2);
  const std::vector<Vec3> pts = {surface_point(s, 0.4, 1.0),
                                 surface_point(s, 2.0, 4.0)};
  const SparseSymMatrix C = assemble_point_matrix(m, pts);
  std::mt19937 rng(23);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(m.n_vertices());
  for (int i = 0; i < u.size(); ++i) u[i] = g(rng);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(m.n_vertices());
  for (const Vec3& x : pts) {
    const MeshLocation loc = locate(m, x);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m.n_vertices());
    for (int k = 0; k < 3; ++k) e[m.triangles[loc.triangle][k]] = loc.bary[k];
    expect += evaluate(m, u, x) * e;
  }
  CHECK((C.apply(u) - expect).lpNorm<Eigen::Infinity>() <= 1e-13);
  CHECK((C.dense() * u - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("factored low-rank operators: apply, dense, combine") {
  const int n = 40;
  std::mt19937 rng(31);
  std::normal_distribution<double> g;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, 2.0 + i * 0.01);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, -0.5);
      trip.emplace_back(i + 1, i, -0.5);
    }
  }
  SpMat base(n, n);
  base.setFromTriplets(trip.begin(), trip.end());
  SparseSymMatrix A(base);
  Eigen::VectorXd b1(n), b2(n);
  for (int i = 0; i < n; ++i) {
    b1[i] = g(rng);
    b2[i] = g(rng);
  }
  A.add_rank_one(b1, 0.7);
  A.add_rank_one(b2, -1.3);

  SparseSymMatrix B(SpMat(base * 2.0));
  B.add_rank_one(b2, 0.25);

  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = g(rng);

  CHECK((A.apply(x) - A.dense() * x).norm() <= 1e-12 * A.apply(x).norm());
  const SparseSymMatrix Cc = combine(2.0, A, -0.5, B);
  const Eigen::VectorXd want = 2.0 * A.apply(x) - 0.5 * B.apply(x);
  CHECK((Cc.apply(x) - want).norm() <= 1e-12 * want.norm());
  CHECK((Cc.dense() - (2.0 * A.dense() - 0.5 * B.dense())).norm() <= 1e-10);
}

TEST_CASE("curvature-correction form reduces to -4S - M on the unit sphere") {
  // With unit radius the coefficient matrix is -4 * (tangent projector)
  // and the zero-order coefficient is -1, so T -> -4S - M as the flat
  // element gradients align with the tangent planes (O(h^2) defect).
  double defect[2];
  int idx = 0;
  for (int level : {2, 3}) {
    const TriMesh m = build_sphere(sphere(1.0), level);
    const SpMat T = assemble_curvature_form(m);
    const SpMat S = assemble_stiffness(m);
    const SpMat M = assemble_mass(m);
    const SpMat D = SpMat(T + 4.0 * S + M).pruned();
    defect[idx++] = max_abs_coeff(D);
    CHECK(max_abs_coeff(SpMat((T - SpMat(T.transpose())).pruned())) <= 1e-14);
  }
  CHECK(defect[1] <= 0.02);
  CHECK(defect[0] >= 3.0 * defect[1]);
}

TEST_CASE("curvature-correction form against the smooth bilinear form") {
  // Independent reference: assemble t(u,u) for an interpolated field and
  // compare with the adaptive parameter-domain integral of the smooth
  // integrand evaluated by the jet calculus.
  const SurfaceSpec s = torus(1.0);
  const ParamField f = [](const Taylor2& th, const Taylor2& ph) {
    return cos(th) + 0.5 * sin(ph);
  };
  const double ref = integrate(s, [&](double th, double ph) {
    const Vec3 x = surface_point(s, th, ph);
    const CurvatureData c = curvature(s, x);
    const FieldCalc fc = field_calc(s, f, th, ph, false);
    const double H = c.h_mean, nsq = c.shape_norm_sq;
    const Mat3 coef =
        (1.5 * H * H - 2.0 * nsq - 2.0) * Mat3::Identity() - 2.0 * H * c.shape;
    const double c0 = -1.5 * H * H * nsq + 2.0 * c.hess_h_shape + c.grad_h_sq +
                      2.0 * H * c.shape_tr3 + c.lap_shape_norm_sq + nsq * nsq -
                      1.0;
    return fc.grad.dot(coef * fc.grad) + c0 * fc.value * fc.value;
  });
  double err[2];
  int idx = 0;
  for (int n : {16, 32}) {
    const TriMesh m = build_torus(s, n, 2 * n);
    const Eigen::VectorXd u = interpolate(m, f);
    const SpMat T = assemble_curvature_form(m);
    err[idx++] = std::abs(u.dot(T * u) - ref);
  }
  CHECK(err[1] <= 0.03 * std::abs(ref));
  CHECK(err[0] >= 3.0 * err[1]);
}

TEST_CASE("evaluate inverts interpolate at lifted points") {
  const SurfaceSpec s = sphere(1.0);
  const TriMesh m = build_sphere(s, 3);
  const ParamField f = cartesian_field(
      s, [](const Taylor2& x, const Taylor2& y, const Taylor2& z) {
        return x * y + z;
      });
  const Eigen::VectorXd u = interpolate(m, f);
  // exact at vertex projections
  for (int i = 0; i < m.n_vertices(); i += 37) {
    const Vec3 p = closest_point(s, m.vertices[i]);
    CHECK(evaluate(m, u, p) == doctest::Approx(u[i]).epsilon(1e-11));
  }
  // second-order accurate at generic points
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const double th = 0.1 + (kPi - 0.2) * u01(rng), ph = 2 * kPi * u01(rng);
    const Vec3 x = surface_point(s, th, ph);
    CHECK(std::abs(evaluate(m, u, x) - field_value(s, f, x)) <= 8e-3);
  }
}

TEST_CASE("l2 helpers agree with the mass matrix") {
  const TriMesh m = build_sphere(sphere(1.0), 2);
  const SpMat M = assemble_mass(m);
  std::mt19937 rng(13);
  std::normal_distribution<double> g;
  Eigen::VectorXd u(m.n_vertices()), v(m.n_vertices());
  for (int i = 0; i < u.size(); ++i) {
    u[i] = g(rng);
    v[i] = g(rng);
  }
  CHECK(l2_inner(M, u, v) == doctest::Approx(u.dot(M * v)).epsilon(1e-14));
  CHECK(l2_norm(M, u) ==
        doctest::Approx(std::sqrt(u.dot(M * u))).epsilon(1e-14));
  CHECK(l2_inner(M, u, v) == doctest::Approx(l2_inner(M, v, u)).epsilon(1e-12));
}
