#include "membrane/problems.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace membrane {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec3> lift_points(const SurfaceSpec& s,
                              const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(closest_point(s, p));
  return out;
}

}  // namespace

void LoadSpec::validate(const SurfaceSpec& s) const {
  if (s.kind != SurfaceKind::Sphere)
    throw std::invalid_argument("point forces are a sphere problem");
  if (points.empty()) throw std::invalid_argument("at least one load required");
  if (magnitudes.size() != static_cast<Eigen::Index>(points.size()))
    throw std::invalid_argument("load magnitudes must match load points");
  for (Eigen::Index k = 0; k < magnitudes.size(); ++k)
    if (magnitudes[k] == 0.0)
      throw std::invalid_argument("load magnitudes must be nonzero");
}

void ConstraintSpec::validate(const SurfaceSpec& s) const {
  if (s.kind != SurfaceKind::CliffordTorus)
    throw std::invalid_argument("point constraints are a torus problem");
  if (points.empty())
    throw std::invalid_argument("at least one constraint required");
  if (targets.size() != static_cast<Eigen::Index>(points.size()))
    throw std::invalid_argument("constraint targets must match points");
  if (!(delta > 0.0) || !(rho > 0.0))
    throw std::invalid_argument("penalty weights must be positive");
  const std::vector<Vec3> lifted = lift_points(s, points);
  for (std::size_t i = 0; i < lifted.size(); ++i)
    for (std::size_t j = i + 1; j < lifted.size(); ++j)
      if ((lifted[i] - lifted[j]).norm() <= 1e-12 * s.radius)
        throw std::invalid_argument("constraint points must be distinct");
}

double default_tau(const SurfaceSpec& s) {
  return 1.0 / (kPi * std::pow(s.radius, 4));
}

struct SphereForcesSolver::Impl {
  const TriMesh* mesh = nullptr;
  double tau = 0.0;
  SpMat M, S;
  std::vector<Eigen::VectorXd> b;  // moments of {1, nu_1, nu_2, nu_3}
  std::unique_ptr<FactorizedSolver> w_solver, u_solver;
};

SphereForcesSolver::SphereForcesSolver(const TriMesh& mesh, double tau,
                                       double tol)
    : impl_(std::make_unique<Impl>()) {
  const SurfaceSpec& s = mesh.surface;
  s.validate();
  if (s.kind != SurfaceKind::Sphere)
    throw std::invalid_argument("point forces are a sphere problem");
  const double R = s.radius;
  if (!(tau > 1.0 / (2.0 * kPi * std::pow(R, 4))))
    throw std::invalid_argument(
        "tau-below-bound: stabilization requires tau > 1/(2 pi R^4)");

  impl_->mesh = &mesh;
  impl_->tau = tau;
  impl_->M = assemble_mass(mesh);
  impl_->S = assemble_stiffness(mesh);
  impl_->b.push_back(moment_vector(mesh, [](const Vec3&) { return 1.0; }));
  for (int r = 0; r < 3; ++r)
    impl_->b.push_back(moment_vector(
        mesh, [r](const Vec3& x) { return x[r] / x.norm(); }));

  SolveOptions opt;
  opt.tol = tol;

  SparseSymMatrix Aw(SpMat(s.kappa * impl_->S + s.sigma * impl_->M));
  if (s.sigma == 0.0) Aw.add_rank_one(impl_->b[0], 1.0);
  impl_->w_solver = std::make_unique<FactorizedSolver>(Aw, opt);

  SparseSymMatrix Au(SpMat(impl_->S - (2.0 / (R * R)) * impl_->M));
  for (const Eigen::VectorXd& bi : impl_->b) Au.add_rank_one(bi, tau);
  impl_->u_solver = std::make_unique<FactorizedSolver>(Au, opt);
}

SphereForcesSolver::SphereForcesSolver(const TriMesh& mesh)
    : SphereForcesSolver(mesh, default_tau(mesh.surface)) {}

SphereForcesSolver::~SphereForcesSolver() = default;
SphereForcesSolver::SphereForcesSolver(SphereForcesSolver&&) noexcept = default;
SphereForcesSolver& SphereForcesSolver::operator=(SphereForcesSolver&&) noexcept =
    default;

const TriMesh& SphereForcesSolver::mesh() const { return *impl_->mesh; }
const SpMat& SphereForcesSolver::mass() const { return impl_->M; }
double SphereForcesSolver::tau() const { return impl_->tau; }

Solution SphereForcesSolver::solve_with_rhs(const Eigen::VectorXd& rhs) const {
  Solution sol;
  sol.w = FieldVec(*impl_->mesh,
                   impl_->w_solver->solve(rhs, &sol.report_w));
  sol.u = FieldVec(*impl_->mesh,
                   impl_->u_solver->solve(impl_->M * sol.w.values,
                                          &sol.report_u));
  sol.orthogonality_residuals.resize(static_cast<Eigen::Index>(impl_->b.size()));
  for (std::size_t i = 0; i < impl_->b.size(); ++i)
    sol.orthogonality_residuals[static_cast<Eigen::Index>(i)] =
        std::abs(impl_->b[i].dot(sol.u.values));
  return sol;
}

Solution SphereForcesSolver::solve(const LoadSpec& loads) const {
  loads.validate(impl_->mesh->surface);
  const std::vector<Vec3> pts = lift_points(impl_->mesh->surface, loads.points);
  Solution sol =
      solve_with_rhs(point_load_vector(*impl_->mesh, pts, loads.magnitudes));
  sol.point_values.resize(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k)
    sol.point_values[static_cast<Eigen::Index>(k)] =
        evaluate(*impl_->mesh, sol.u.values, pts[k]);
  sol.energy = -0.5 * loads.magnitudes.dot(sol.point_values);
  return sol;
}

Solution solve_point_forces_sphere(const TriMesh& m, const LoadSpec& loads,
                                   double tau) {
  return SphereForcesSolver(m, tau).solve(loads);
}

Solution solve_point_forces_sphere(const TriMesh& m, const LoadSpec& loads) {
  return solve_point_forces_sphere(m, loads, default_tau(m.surface));
}

double discrete_force_energy(const TriMesh& m, const Solution& sol,
                             const LoadSpec& loads) {
  const std::vector<Vec3> pts = lift_points(m.surface, loads.points);
  double acc = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k)
    acc += loads.magnitudes[static_cast<Eigen::Index>(k)] *
           evaluate(m, sol.u.values, pts[k]);
  return -0.5 * acc;
}

EnergyCurve interaction_sweep(const TriMesh& m, double beta1, double beta2,
                              int n_samples, double tau, double tol) {
  if (n_samples < 16)
    throw std::invalid_argument("interaction sweep needs at least 16 samples");
  const double R = m.surface.radius;
  const Vec3 x1(0.0, 0.0, R);
  const SphereForcesSolver solver(m, tau, tol);

  EnergyCurve curve;
  curve.theta.resize(n_samples);
  curve.energy.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double th = kPi * i / (n_samples - 1);
    LoadSpec loads;
    loads.points = {x1, Vec3(R * std::sin(th), 0.0, R * std::cos(th))};
    loads.magnitudes = Eigen::Vector2d(beta1, beta2);
    const Solution sol = solver.solve(loads);
    curve.theta[i] = th;
    curve.energy[i] = sol.energy;
    curve.method = sol.report_u.method;
  }

  // Critical angle from the single-force profile theta -> G(X(theta)).
  LoadSpec unit;
  unit.points = {x1};
  unit.magnitudes = Eigen::VectorXd::Ones(1);
  const Solution green = solver.solve(unit);
  auto profile = [&](double th) {
    return evaluate(m, green.u.values,
                    Vec3(R * std::sin(th), 0.0, R * std::cos(th)));
  };
  int jmin = 0;
  double gmin = profile(curve.theta[0]);
  for (int i = 1; i < n_samples; ++i) {
    const double g = profile(curve.theta[i]);
    if (g < gmin) {
      gmin = g;
      jmin = i;
    }
  }
  double lo = curve.theta[std::max(jmin - 1, 0)];
  double hi = curve.theta[std::min(jmin + 1, n_samples - 1)];
  const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol_angle = 0.1 * kPi / 180.0;
  double a = lo, bb = hi;
  double c1 = bb - gold * (bb - a), c2 = a + gold * (bb - a);
  double f1 = profile(c1), f2 = profile(c2);
  for (int it = 0; it < 200 && (bb - a) > tol_angle; ++it) {
    if (f1 <= f2) {
      bb = c2;
      c2 = c1;
      f2 = f1;
      c1 = bb - gold * (bb - a);
      f1 = profile(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gold * (bb - a);
      f2 = profile(c2);
    }
  }
  curve.theta_c = 0.5 * (a + bb);
  curve.theta_c_degrees = curve.theta_c * 180.0 / kPi;
  return curve;
}

Solution greens_field(const TriMesh& m, const Vec3& x0, double tau) {
  LoadSpec unit;
  unit.points = {x0};
  unit.magnitudes = Eigen::VectorXd::Ones(1);
  return solve_point_forces_sphere(m, unit, tau);
}

Solution solve_point_constraints_torus(const TriMesh& m,
                                       const ConstraintSpec& c) {
  const SurfaceSpec& s = m.surface;
  s.validate();
  if (s.kind != SurfaceKind::CliffordTorus)
    throw std::invalid_argument("point constraints are a torus problem");
  if (s.kappa != 1.0)
    throw std::invalid_argument(
        "torus problems are normalized to unit bending modulus");
  c.validate(s);
  const std::vector<Vec3> pts = lift_points(s, c.points);

  const SpMat M = assemble_mass(m);
  const SpMat S = assemble_stiffness(m);
  const SpMat T = assemble_curvature_form(m);
  const SpMat K = S + M;

  SparseSymMatrix A11(T);
  const SparseSymMatrix Cpts = assemble_point_matrix(m, pts);
  for (const RankOneTerm& t : Cpts.rank_terms)
    A11.add_rank_one(t.factor, t.weight / c.delta);

  const ConstrainedKernel ck = constrained_kernel(s, pts);
  std::vector<Eigen::VectorXd> bvecs;
  if (ck.size() > 0) {
    bvecs = combined_moment_vectors(m, ck.g_raw, ck.g_coeffs);
    for (const Eigen::VectorXd& bv : bvecs) A11.add_rank_one(bv, 1.0 / c.rho);
  }

  const SparseSymMatrix A22(SpMat(-M));
  const Eigen::VectorXd b1 =
      point_value_rhs(m, pts, c.targets) / c.delta;
  const Eigen::VectorXd b2 = Eigen::VectorXd::Zero(m.n_vertices());

  const BlockSolution bs = solve_block_sym(A11, K, A22, b1, b2);

  Solution sol;
  sol.u = FieldVec(m, bs.x1);
  sol.w = FieldVec(m, bs.x2);
  sol.report_block = bs.report;

  const Eigen::Index n_pts = static_cast<Eigen::Index>(pts.size());
  sol.point_values.resize(n_pts);
  sol.constraint_residuals.resize(n_pts);
  for (Eigen::Index k = 0; k < n_pts; ++k) {
    sol.point_values[k] = evaluate(m, sol.u.values, pts[k]);
    sol.constraint_residuals[k] = std::abs(sol.point_values[k] - c.targets[k]);
  }
  sol.orthogonality_residuals.resize(static_cast<Eigen::Index>(bvecs.size()));
  for (std::size_t l = 0; l < bvecs.size(); ++l)
    sol.orthogonality_residuals[static_cast<Eigen::Index>(l)] =
        std::abs(bvecs[l].dot(sol.u.values));

  const double quad =
      sol.u.values.dot(T * sol.u.values) + sol.w.values.dot(K * sol.u.values);
  double penalty = sol.constraint_residuals.squaredNorm() / (2.0 * c.delta);
  penalty += sol.orthogonality_residuals.squaredNorm() / (2.0 * c.rho);
  sol.energy = 0.5 * quad + penalty;
  return sol;
}

PenaltyStudy penalty_convergence_study(const TriMesh& m,
                                       const ConstraintSpec& base,
                                       const std::vector<double>& deltas) {
  if (deltas.size() < 2)
    throw std::invalid_argument("penalty study needs at least two deltas");
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (!(deltas[i] < deltas[i - 1]))
      throw std::invalid_argument("delta sequence must be decreasing");

  const SpMat M = assemble_mass(m);
  const AForm a_form = discrete_a_form(m);
  const double rho_ratio = base.rho / base.delta;

  PenaltyStudy study;
  Eigen::VectorXd prev;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    ConstraintSpec c = base;
    c.delta = deltas[i];
    c.rho = rho_ratio * deltas[i];
    const Solution sol = solve_point_constraints_torus(m, c);

    PenaltyStudyRow row;
    row.delta = deltas[i];
    row.max_constraint_residual = sol.constraint_residuals.size()
                                      ? sol.constraint_residuals.maxCoeff()
                                      : 0.0;
    row.energy = sol.energy;
    if (i > 0) {
      const Eigen::VectorXd d = sol.u.values - prev;
      row.diff_l2 = l2_norm(M, d);
      row.diff_energy = std::sqrt(std::max(a_form(d, d), 0.0));
    }
    prev = sol.u.values;
    study.rows.push_back(row);
  }

  double order_acc = 0.0;
  int order_cnt = 0;
  for (std::size_t i = 0; i + 1 < study.rows.size(); ++i) {
    const double r0 = study.rows[i].max_constraint_residual;
    const double r1 = study.rows[i + 1].max_constraint_residual;
    if (r0 > 0.0 && r1 > 0.0) {
      order_acc += std::log(r0 / r1) /
                   std::log(study.rows[i].delta / study.rows[i + 1].delta);
      ++order_cnt;
    }
    if (r1 > r0) study.monotone_decay = false;
  }
  for (std::size_t i = 2; i < study.rows.size(); ++i)
    if (study.rows[i].diff_l2 > study.rows[i - 1].diff_l2)
      study.monotone_decay = false;
  study.residual_order = order_cnt ? order_acc / order_cnt : 0.0;
  return study;
}

ClusteringReport clustering_experiment(
    const TriMesh& m, const Eigen::VectorXd& betas,
    const std::vector<std::vector<Vec3>>& candidates, double tau) {
  if (betas.size() < 2 || betas.size() > 3)
    throw std::invalid_argument("clustering experiment covers 2 or 3 forces");
  if (candidates.empty())
    throw std::invalid_argument("no candidate placements");
  const SphereForcesSolver solver(m, tau);
  const double R = m.surface.radius;

  ClusteringReport rep;
  for (const std::vector<Vec3>& tuple : candidates) {
    if (tuple.size() != static_cast<std::size_t>(betas.size()))
      throw std::invalid_argument("candidate tuple size must match forces");
    LoadSpec loads;
    loads.points = tuple;
    loads.magnitudes = betas;
    rep.energies.push_back(solver.solve(loads).energy);
  }
  rep.argmin = static_cast<int>(
      std::min_element(rep.energies.begin(), rep.energies.end()) -
      rep.energies.begin());

  const std::vector<Vec3> best =
      lift_points(m.surface, candidates[static_cast<std::size_t>(rep.argmin)]);
  double max_angle = 0.0;
  for (std::size_t i = 0; i < best.size(); ++i)
    for (std::size_t j = i + 1; j < best.size(); ++j) {
      const double cosang =
          std::clamp(best[i].dot(best[j]) / (R * R), -1.0, 1.0);
      max_angle = std::max(max_angle, std::acos(cosang));
    }
  rep.argmin_max_pair_angle = max_angle;
  const double max_chord = 2.0 * R * std::sin(0.5 * max_angle);
  rep.argmin_clustered = max_chord <= m.max_edge_length() * (1.0 + 1e-9);
  return rep;
}

AForm discrete_a_form(const TriMesh& m) {
  const SurfaceSpec s = m.surface;
  s.validate();
  auto M = std::make_shared<SpMat>(assemble_mass(m));
  auto Minv = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  Minv->compute(*M);
  if (Minv->info() != Eigen::Success)
    throw std::runtime_error("mass matrix factorization failed");

  if (s.kind == SurfaceKind::Sphere) {
    auto S = std::make_shared<SpMat>(assemble_stiffness(m));
    const double kappa = s.kappa;
    const double grad_coef = s.sigma - 2.0 * s.kappa / (s.radius * s.radius);
    const double mass_coef = -2.0 * s.sigma / (s.radius * s.radius);
    return [=](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      const Eigen::VectorXd Sv = (*S) * v;
      return kappa * ((*S) * u).dot(Minv->solve(Sv)) + grad_coef * u.dot(Sv) +
             mass_coef * u.dot((*M) * v);
    };
  }
  auto T = std::make_shared<SpMat>(assemble_curvature_form(m));
  auto K = std::make_shared<SpMat>(SpMat(assemble_stiffness(m) + *M));
  return [=](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return u.dot((*T) * v) + ((*K) * u).dot(Minv->solve((*K) * v));
  };
}

SpectralReport spectral_verification(const SurfaceSpec& s,
                                     const std::vector<int>& levels) {
  s.validate();
  if (s.kind != SurfaceKind::Sphere)
    throw std::invalid_argument("spectral verification is a sphere diagnostic");
  if (levels.empty()) throw std::invalid_argument("no refinement levels given");

  const double R = s.radius;
  const double lam = 6.0 / (R * R);
  const double factor =
      s.kappa * lam * lam + (s.sigma - 2.0 * s.kappa / (R * R)) * lam -
      2.0 * s.sigma / (R * R);
  const ParamField Y = cartesian_field(
      s, [](const Taylor2& x, const Taylor2& y, const Taylor2&) {
        return x * y;
      });

  SpectralReport rep;
  std::unique_ptr<TriMesh> last;
  for (int level : levels) {
    const TriMesh mesh = build_sphere(s, level);
    const SphereForcesSolver solver(mesh, default_tau(s));
    const Eigen::VectorXd target = interpolate(mesh, Y);
    const Solution sol =
        solver.solve_with_rhs(factor * (solver.mass() * target));
    rep.mesh_sizes.push_back(mesh.max_edge_length());
    rep.l2_errors.push_back(l2_norm(solver.mass(), sol.u.values - target));
    last = std::make_unique<TriMesh>(mesh);
  }

  rep.observed_order = 0.0;
  for (std::size_t i = 0; i + 1 < rep.l2_errors.size(); ++i) {
    const double order = std::log(rep.l2_errors[i] / rep.l2_errors[i + 1]) /
                         std::log(rep.mesh_sizes[i] / rep.mesh_sizes[i + 1]);
    rep.observed_order =
        (i == 0) ? order : std::min(rep.observed_order, order);
  }

  rep.eigenvalues =
      smallest_eigenvalues(assemble_stiffness(*last), assemble_mass(*last), 9);

  const TriMesh coarse = build_sphere(s, levels.front());
  const TriMesh fine = refine(coarse);
  rep.kernel_coarse = kernel_residuals(coarse, discrete_a_form(coarse));
  rep.kernel_fine = kernel_residuals(fine, discrete_a_form(fine));
  // Ratio of worst-case residuals.  Per-field ratios would be noise for
  // the constant, which is annihilated to round-off on every mesh.
  const double worst_coarse =
      *std::max_element(rep.kernel_coarse.begin(), rep.kernel_coarse.end());
  const double worst_fine =
      *std::max_element(rep.kernel_fine.begin(), rep.kernel_fine.end());
  rep.kernel_decay = worst_coarse / worst_fine;
  return rep;
}

}  // namespace membrane
