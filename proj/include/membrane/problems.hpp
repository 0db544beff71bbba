#pragma once

#include <memory>
#include <string>
#include <vector>

#include "membrane/kernel.hpp"
#include "membrane/solve.hpp"

namespace membrane {

// Point forces beta_k at surface points X_k (sphere problems).
struct LoadSpec {
  std::vector<Vec3> points;
  Eigen::VectorXd magnitudes;

  void validate(const SurfaceSpec& s) const;
};

// Point displacement constraints u(X_k) = target_k (torus problems),
// enforced by quadratic penalties: delta for the constraints, rho for the
// kernel-moment terms that pin the invariant directions.
struct ConstraintSpec {
  std::vector<Vec3> points;
  Eigen::VectorXd targets;
  double delta = 1e-6;
  double rho = 1e-8;

  void validate(const SurfaceSpec& s) const;
};

// Displacement u and auxiliary field w (= -lap u + lower order, depending on
// the surface) of one solve, plus the bookkeeping the experiments need.
struct Solution {
  FieldVec u, w;
  double energy = 0.0;                      // -1/2 sum_k beta_k u(X_k), or
                                            // the penalized quadratic energy
  Eigen::VectorXd point_values;             // u at the problem points
  Eigen::VectorXd orthogonality_residuals;  // |(u, g_l)_h| per moment field
  Eigen::VectorXd constraint_residuals;     // |u(X_k) - target_k|
  SolveReport report_w, report_u;           // split solves (sphere)
  SolveReport report_block;                 // block solve (torus)
};

// Stabilization weight for the second sphere equation; any value above
// 1/(2 pi R^4) is admissible, this default sits at twice the bound.
double default_tau(const SurfaceSpec& s);

// Sphere point-force solver with reusable factorizations: the system
// matrices depend only on mesh and parameters, so sweeps over load
// configurations pay one factorization and a pair of backsolves per load.
class SphereForcesSolver {
 public:
  SphereForcesSolver(const TriMesh& mesh, double tau, double tol = 1e-10);
  explicit SphereForcesSolver(const TriMesh& mesh);
  ~SphereForcesSolver();
  SphereForcesSolver(SphereForcesSolver&&) noexcept;
  SphereForcesSolver& operator=(SphereForcesSolver&&) noexcept;

  Solution solve(const LoadSpec& loads) const;
  // Same pipeline with a caller-built load vector (manufactured solutions).
  Solution solve_with_rhs(const Eigen::VectorXd& rhs) const;

  const TriMesh& mesh() const;
  const SpMat& mass() const;
  double tau() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Solution solve_point_forces_sphere(const TriMesh& m, const LoadSpec& loads,
                                   double tau);
Solution solve_point_forces_sphere(const TriMesh& m, const LoadSpec& loads);

// -1/2 sum_k beta_k u(X_k): the discrete interaction energy of the loads.
double discrete_force_energy(const TriMesh& m, const Solution& sol,
                             const LoadSpec& loads);

// Two-force interaction energy over the separation angle, with the critical
// angle extracted from the single-force kernel profile theta -> G(X(theta)).
struct EnergyCurve {
  std::vector<double> theta;   // separation angles in [0, pi]
  std::vector<double> energy;  // E_h(theta) for the two-force problem
  double theta_c = 0.0;        // minimizer of the single-force profile
  double theta_c_degrees = 0.0;
  std::string method;          // factorization used by the solver
};

EnergyCurve interaction_sweep(const TriMesh& m, double beta1, double beta2,
                              int n_samples, double tau, double tol = 1e-10);

// Single unit force at x0: u is (a discrete stand-in for) the kernel of the
// force-to-displacement map.
Solution greens_field(const TriMesh& m, const Vec3& x0, double tau);

// Torus point-constraint problem via the symmetric block system in (u, w).
Solution solve_point_constraints_torus(const TriMesh& m,
                                       const ConstraintSpec& c);

// Penalty continuation: re-solve for each delta (rho scaled proportionally)
// and track constraint residuals and successive differences.
struct PenaltyStudyRow {
  double delta = 0.0;
  double max_constraint_residual = 0.0;
  double energy = 0.0;
  double diff_l2 = 0.0;      // |u_delta - u_prev|_M        (0 for first row)
  double diff_energy = 0.0;  // sqrt(a_h(d, d)) of the same difference
};

struct PenaltyStudy {
  std::vector<PenaltyStudyRow> rows;
  double residual_order = 0.0;  // mean slope of log(residual) vs log(delta)
  bool monotone_decay = true;   // residuals and successive diffs both decay
};

PenaltyStudy penalty_convergence_study(const TriMesh& m,
                                       const ConstraintSpec& base,
                                       const std::vector<double>& deltas);

// Energies of candidate force placements; flags whether the minimizer
// collapses to a cluster of at most one mesh edge across the points.
struct ClusteringReport {
  std::vector<double> energies;
  int argmin = -1;
  double argmin_max_pair_angle = 0.0;  // widest pairwise separation angle
  bool argmin_clustered = false;
};

ClusteringReport clustering_experiment(
    const TriMesh& m, const Eigen::VectorXd& betas,
    const std::vector<std::vector<Vec3>>& candidates, double tau);

// The discrete energy form a_h on nodal vectors (mass inverse applied via a
// cached factorization).  This is the bilinear form the kernel checks probe.
AForm discrete_a_form(const TriMesh& m);

// Bundled verification: manufactured-solution convergence across sphere
// refinement levels, the low end of the Laplace spectrum on the finest
// level, and kernel annihilation decay under one refinement of the coarsest.
struct SpectralReport {
  Eigen::VectorXd eigenvalues;  // smallest laplace eigenvalues (count = 9)
  std::vector<double> mesh_sizes;
  std::vector<double> l2_errors;
  double observed_order = 0.0;  // min consecutive-order estimate
  std::vector<double> kernel_coarse, kernel_fine;
  double kernel_decay = 0.0;  // worst-case residual ratio coarse/fine
};

SpectralReport spectral_verification(const SurfaceSpec& s,
                                     const std::vector<int>& levels);

}  // namespace membrane
