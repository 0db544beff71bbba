#include "membrane/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>

#include "membrane/io.hpp"

namespace membrane {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

TriMesh build_mesh(const RunConfig& rc) {
  rc.surface.validate();
  if (rc.surface.kind == SurfaceKind::Sphere)
    return build_sphere(rc.surface, rc.level);
  return build_torus(rc.surface, rc.n_theta, rc.n_phi);
}

std::filesystem::path prepare_out(const RunConfig& rc) {
  const std::filesystem::path dir(rc.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

bool wants(const RunConfig& rc, const std::string& fmt) {
  return std::find(rc.formats.begin(), rc.formats.end(), fmt) !=
         rc.formats.end();
}

json report_of(const SolveReport& r) {
  return json{{"n", r.n},
              {"method", r.method},
              {"rel_residual", r.rel_residual},
              {"refinement_steps", r.refinement_steps},
              {"seconds", r.seconds}};
}

json surface_info(const SurfaceSpec& s) {
  return json{
      {"kind", s.kind == SurfaceKind::Sphere ? "sphere" : "torus"},
      {"radius", s.radius},
      {"kappa", s.kappa},
      {"sigma", s.sigma}};
}

json mesh_info(const TriMesh& m) {
  return json{{"vertices", m.n_vertices()},
              {"triangles", m.n_triangles()},
              {"max_edge_length", m.max_edge_length()},
              {"area", m.area()}};
}

void write_report(const std::filesystem::path& dir, const json& j) {
  const std::filesystem::path path = dir / "report.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Deterministic, pole-free sample points: Fibonacci lattice on the sphere,
// offset tensor grid on the torus.
std::vector<Vec3> sample_points(const SurfaceSpec& s, int n) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  if (s.kind == SurfaceKind::Sphere) {
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = 2.0 * kPi * std::fmod(i / golden, 1.0);
      pts.emplace_back(s.radius * r * std::cos(phi),
                       s.radius * r * std::sin(phi), s.radius * z);
    }
  } else {
    const int n1 = static_cast<int>(std::ceil(std::sqrt(double(n))));
    for (int i = 0; i < n1 && static_cast<int>(pts.size()) < n; ++i)
      for (int j = 0; j < n1 && static_cast<int>(pts.size()) < n; ++j)
        pts.push_back(surface_point(s, 2.0 * kPi * (i + 0.5) / n1,
                                    2.0 * kPi * (j + 0.37) / n1));
  }
  return pts;
}

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string relation = "<=";
};

void log_check(std::ostream& log, const Check& c) {
  log << "check " << c.name << ": " << (c.pass ? "pass" : "FAIL")
      << " value=" << c.value << " " << c.relation << " bound=" << c.bound
      << '\n';
}

json check_json(const Check& c) {
  return json{{"name", c.name},
              {"pass", c.pass},
              {"value", c.value},
              {"bound", c.bound},
              {"relation", c.relation}};
}

Check willmore_check(const SurfaceSpec& s, int n_points) {
  Check c{"willmore-residual"};
  c.bound = 1e-10;
  for (const Vec3& x : sample_points(s, n_points))
    c.value = std::max(c.value, std::abs(willmore_residual(s, x)));
  c.pass = c.value <= c.bound;
  return c;
}

// Mean curvature against a central finite difference of the divergence of
// the closest-point extension of the normal field; fully independent of the
// jet machinery that produces the analytic curvature bundle.
Check curvature_fd_check(const SurfaceSpec& s, int n_points) {
  Check c{"curvature-fd"};
  c.bound = 1e-6;
  const double h = 1e-5 * s.radius;
  const std::vector<Vec3> pts = sample_points(s, n_points);
  for (const Vec3& x : pts) {
    double div = 0.0;
    for (int i = 0; i < 3; ++i) {
      Vec3 xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      div += (normal(s, closest_point(s, xp))[i] -
              normal(s, closest_point(s, xm))[i]) /
             (2.0 * h);
    }
    const double href = curvature(s, x).h_mean;
    c.value = std::max(c.value, std::abs(div - href) / (1.0 + std::abs(href)));
  }
  c.pass = c.value <= c.bound;
  return c;
}

std::pair<Check, Check> kernel_checks(const TriMesh& coarse,
                                      const TriMesh& fine, double fine_bound) {
  const double rc = verify_kernel(coarse, discrete_a_form(coarse));
  const double rf = verify_kernel(fine, discrete_a_form(fine));
  Check level{"kernel-residual"};
  level.value = rf;
  level.bound = fine_bound;
  level.pass = rf <= fine_bound;
  Check decay{"kernel-decay"};
  decay.value = rc / rf;
  decay.bound = 2.0;
  decay.relation = ">=";
  decay.pass = decay.value >= decay.bound;
  return {level, decay};
}

Check poincare_check(const TriMesh& mesh) {
  const SurfaceSpec& s = mesh.surface;
  const SpMat M = assemble_mass(mesh);
  const SpMat S = assemble_stiffness(mesh);
  const KernelBasis kb = kernel_basis(s);

  // M-orthonormal basis of the interpolated kernel.
  std::vector<Eigen::VectorXd> z;
  for (const ParamField& f : kb.f) {
    Eigen::VectorXd v = interpolate(mesh, f);
    for (const Eigen::VectorXd& zi : z) v -= l2_inner(M, zi, v) * zi;
    v /= l2_norm(M, v);
    z.push_back(std::move(v));
  }

  std::mt19937 rng(97531u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double cap = s.radius * s.radius / 6.0 * 1.05;
  Check c{"poincare"};
  c.bound = 1.0;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd u(mesh.n_vertices());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);
    for (const Eigen::VectorXd& zi : z) u -= l2_inner(M, zi, u) * zi;
    const double ratio = u.dot(M * u) / (cap * u.dot(S * u));
    c.value = std::max(c.value, ratio);
  }
  c.pass = c.value <= c.bound;
  return c;
}

}  // namespace

void cmd_solve_forces(const RunConfig& rc, std::ostream& log) {
  if (!rc.loads)
    throw std::invalid_argument("solve-forces requires a [loads] block");
  const TriMesh mesh = build_mesh(rc);
  const SphereForcesSolver solver(mesh, rc.effective_tau(), rc.tol);
  const Solution sol = solver.solve(*rc.loads);
  const std::filesystem::path dir = prepare_out(rc);

  if (wants(rc, "vtk"))
    write_vtk((dir / "fields.vtk").string(), mesh,
              {{"u", sol.u.values}, {"w", sol.w.values}});
  if (wants(rc, "obj"))
    write_obj((dir / "deformed.obj").string(), mesh, sol.u.values, rc.epsilon);
  if (wants(rc, "csv")) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rc.loads->points.size(); ++k) {
      const Vec3 x = closest_point(rc.surface, rc.loads->points[k]);
      rows.push_back({x[0], x[1], x[2],
                      rc.loads->magnitudes[static_cast<Eigen::Index>(k)],
                      sol.point_values[static_cast<Eigen::Index>(k)]});
    }
    write_csv((dir / "forces.csv").string(), {"x", "y", "z", "beta", "u"},
              rows);
  }

  write_report(dir, json{{"command", "solve-forces"},
                         {"surface", surface_info(rc.surface)},
                         {"mesh", mesh_info(mesh)},
                         {"tau", rc.effective_tau()},
                         {"energy", sol.energy},
                         {"point_values", to_vector(sol.point_values)},
                         {"orthogonality_residuals",
                          to_vector(sol.orthogonality_residuals)},
                         {"solve_w", report_of(sol.report_w)},
                         {"solve_u", report_of(sol.report_u)}});
  log << "energy " << sol.energy << ", wrote " << dir.string() << "\n";
}

void cmd_solve_constraints(const RunConfig& rc, std::ostream& log) {
  if (!rc.constraints)
    throw std::invalid_argument(
        "solve-constraints requires a [constraints] block");
  const TriMesh mesh = build_mesh(rc);
  const Solution sol = solve_point_constraints_torus(mesh, *rc.constraints);
  const std::filesystem::path dir = prepare_out(rc);

  if (wants(rc, "vtk"))
    write_vtk((dir / "fields.vtk").string(), mesh,
              {{"u", sol.u.values}, {"w", sol.w.values}});
  if (wants(rc, "obj"))
    write_obj((dir / "deformed.obj").string(), mesh, sol.u.values, rc.epsilon);
  if (wants(rc, "csv")) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rc.constraints->points.size(); ++k) {
      const Vec3 x = closest_point(rc.surface, rc.constraints->points[k]);
      const Eigen::Index kk = static_cast<Eigen::Index>(k);
      rows.push_back({x[0], x[1], x[2], rc.constraints->targets[kk],
                      sol.point_values[kk], sol.constraint_residuals[kk]});
    }
    write_csv((dir / "constraints.csv").string(),
              {"x", "y", "z", "alpha", "u", "residual"}, rows);
  }

  write_report(dir,
               json{{"command", "solve-constraints"},
                    {"surface", surface_info(rc.surface)},
                    {"mesh", mesh_info(mesh)},
                    {"delta", rc.constraints->delta},
                    {"rho", rc.constraints->rho},
                    {"energy", sol.energy},
                    {"point_values", to_vector(sol.point_values)},
                    {"constraint_residuals",
                     to_vector(sol.constraint_residuals)},
                    {"orthogonality_residuals",
                     to_vector(sol.orthogonality_residuals)},
                    {"solve_block", report_of(sol.report_block)}});
  log << "max constraint residual "
      << (sol.constraint_residuals.size()
              ? sol.constraint_residuals.maxCoeff()
              : 0.0)
      << ", wrote " << dir.string() << "\n";
}

void cmd_sweep(const RunConfig& rc, std::ostream& log) {
  const TriMesh mesh = build_mesh(rc);
  const EnergyCurve curve =
      interaction_sweep(mesh, rc.sweep_beta1, rc.sweep_beta2, rc.sweep_samples,
                        rc.effective_tau(), rc.tol);
  const std::filesystem::path dir = prepare_out(rc);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < curve.theta.size(); ++i)
    rows.push_back({curve.theta[i], curve.energy[i]});
  write_csv((dir / "sweep.csv").string(), {"theta", "energy"}, rows);

  write_report(dir, json{{"command", "sweep"},
                         {"surface", surface_info(rc.surface)},
                         {"mesh", mesh_info(mesh)},
                         {"beta1", rc.sweep_beta1},
                         {"beta2", rc.sweep_beta2},
                         {"samples", rc.sweep_samples},
                         {"tau", rc.effective_tau()},
                         {"theta_c_radians", curve.theta_c},
                         {"theta_c_degrees", curve.theta_c_degrees},
                         {"method", curve.method}});
  log << "theta_c " << curve.theta_c_degrees << " deg, wrote " << dir.string()
      << "\n";
}

bool cmd_verify(const RunConfig& rc, std::ostream& log) {
  rc.surface.validate();
  std::vector<Check> checks;
  checks.push_back(willmore_check(rc.surface, rc.verify_points));
  checks.push_back(curvature_fd_check(rc.surface, std::min(rc.verify_points, 40)));

  if (rc.surface.kind == SurfaceKind::Sphere) {
    const int lv = rc.verify_levels.empty() ? 3 : rc.verify_levels.back();
    const TriMesh coarse = build_sphere(rc.surface, lv);
    const TriMesh fine = refine(coarse);
    const auto [level_check, decay_check] = kernel_checks(coarse, fine, 0.1);
    checks.push_back(level_check);
    checks.push_back(decay_check);
    checks.push_back(poincare_check(coarse));

    const SpectralReport rep = spectral_verification(rc.surface, rc.verify_levels);
    Check order{"manufactured-order"};
    order.value = rep.observed_order;
    order.bound = 1.7;
    order.relation = ">=";
    order.pass = rc.verify_levels.size() < 2 || order.value >= order.bound;
    checks.push_back(order);

    Check eig{"laplace-eigenvalue"};
    const double lam1 = 2.0 / (rc.surface.radius * rc.surface.radius);
    // eigenvalues[0] ~ 0 (constants); 1..3 are the first nonzero triple
    eig.value = std::abs(rep.eigenvalues[1] - lam1) / lam1;
    eig.bound = 0.05;
    eig.pass = eig.value <= eig.bound;
    checks.push_back(eig);

    log << "manufactured L2 errors:";
    for (std::size_t i = 0; i < rep.l2_errors.size(); ++i)
      log << " level " << rc.verify_levels[i] << ": " << rep.l2_errors[i]
          << (i + 1 < rep.l2_errors.size() ? "," : "");
    log << " (order " << rep.observed_order << ")\n";
  } else {
    const TriMesh coarse = build_torus(rc.surface, rc.n_theta, rc.n_phi);
    const TriMesh fine = build_torus(rc.surface, 2 * rc.n_theta, 2 * rc.n_phi);
    const auto [level_check, decay_check] = kernel_checks(coarse, fine, 0.25);
    checks.push_back(level_check);
    checks.push_back(decay_check);
  }

  bool all = true;
  json jchecks = json::array();
  for (const Check& c : checks) {
    log_check(log, c);
    jchecks.push_back(check_json(c));
    all = all && c.pass;
  }
  const std::filesystem::path dir = prepare_out(rc);
  write_report(dir, json{{"command", "verify"},
                         {"surface", surface_info(rc.surface)},
                         {"checks", jchecks},
                         {"all_pass", all}});
  log << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all;
}

void cmd_mesh(const RunConfig& rc, std::ostream& log) {
  const TriMesh mesh = build_mesh(rc);
  const std::filesystem::path dir = prepare_out(rc);
  if (wants(rc, "vtk")) write_vtk((dir / "mesh.vtk").string(), mesh);
  if (wants(rc, "obj")) write_obj((dir / "mesh.obj").string(), mesh);

  const SurfaceSpec& s = rc.surface;
  const double exact_area =
      s.kind == SurfaceKind::Sphere
          ? 4.0 * kPi * s.radius * s.radius
          : 4.0 * kPi * kPi * s.radius * s.ring_radius();
  write_report(dir, json{{"command", "mesh"},
                         {"surface", surface_info(s)},
                         {"mesh", mesh_info(mesh)},
                         {"exact_area", exact_area},
                         {"area_defect", exact_area - mesh.area()}});
  log << mesh.n_vertices() << " vertices, " << mesh.n_triangles()
      << " triangles, wrote " << dir.string() << "\n";
}

int run_command(const std::string& name, const std::string& config_path,
                const CliOverrides& overrides, std::ostream& log) {
  try {
    RunConfig rc =
        config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (overrides.out_dir) rc.out_dir = *overrides.out_dir;
    if (overrides.level) {
      rc.level = *overrides.level;
      rc.verify_levels = {std::max(1, *overrides.level - 1),
                          *overrides.level};
    }
    if (overrides.tol) rc.tol = *overrides.tol;

    if (name == "solve-forces") {
      cmd_solve_forces(rc, log);
    } else if (name == "solve-constraints") {
      cmd_solve_constraints(rc, log);
    } else if (name == "sweep") {
      cmd_sweep(rc, log);
    } else if (name == "verify") {
      if (!cmd_verify(rc, log)) return kCheckFailed;
    } else if (name == "mesh") {
      cmd_mesh(rc, log);
    } else {
      log << "error: unknown command `" << name << "`\n";
      return kParseError;
    }
    return kOk;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kParseError;
  } catch (const SolverError& e) {
    log << "error: solver: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::domain_error& e) {
    log << "error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace membrane
