#include "membrane/solve.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <random>

namespace membrane {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double inf_norm(const SparseSymMatrix& A) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(A.size());
  for (int k = 0; k < A.base.outerSize(); ++k)
    for (SpMat::InnerIterator it(A.base, k); it; ++it)
      row[it.row()] += std::abs(it.value());
  for (const auto& rt : A.rank_terms)
    row += std::abs(rt.weight) * rt.factor.lpNorm<1>() * rt.factor.cwiseAbs();
  return row.maxCoeff();
}

// Bordered augmentation: x solves (base + sum w_k b_k b_k^T) x = b iff
// [base U; U^T diag(-1/w_k)] (x; y) = (b; 0).  Terms with zero weight are
// dropped.  An optional diagonal shift regularizes near-null probing.
SpMat augmented_matrix(const SparseSymMatrix& A, double diag_shift) {
  const int n = A.size();
  std::vector<const RankOneTerm*> terms;
  for (const auto& rt : A.rank_terms)
    if (rt.weight != 0.0) terms.push_back(&rt);
  const int N = static_cast<int>(terms.size());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.base.nonZeros() + 2 * static_cast<size_t>(N) * n + n + N);
  for (int k = 0; k < A.base.outerSize(); ++k)
    for (SpMat::InnerIterator it(A.base, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  if (diag_shift != 0.0)
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, diag_shift);
  for (int j = 0; j < N; ++j) {
    const auto& rt = *terms[j];
    for (int i = 0; i < n; ++i) {
      const double v = rt.factor[i];
      if (v != 0.0) {
        trip.emplace_back(i, n + j, v);
        trip.emplace_back(n + j, i, v);
      }
    }
    trip.emplace_back(n + j, n + j, -1.0 / rt.weight);
  }
  SpMat K(n + N, n + N);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

Eigen::VectorXd near_null_estimate(const SparseSymMatrix& A) {
  const int n = A.size();
  const double mu = 1e-12 * (inf_norm(A) + 1.0);
  Eigen::SparseLU<SpMat> lu;
  lu.compute(augmented_matrix(A, mu));
  std::mt19937 rng(20240817);
  std::normal_distribution<double> dist;
  Eigen::VectorXd z(n + static_cast<int>(lu.rows()) - n);
  z.setZero();
  for (int i = 0; i < n; ++i) z[i] = dist(rng);
  z.head(n).normalize();
  if (lu.info() != Eigen::Success) return Eigen::VectorXd();
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd y = lu.solve(z);
    if (lu.info() != Eigen::Success || !y.allFinite()) return Eigen::VectorXd();
    const double nn = y.head(n).norm();
    if (nn == 0.0) return Eigen::VectorXd();
    z.setZero();
    z.head(n) = y.head(n) / nn;
  }
  return z.head(n);
}

}  // namespace

struct FactorizedSolver::Impl {
  SparseSymMatrix A;  // owned copy: backsolves must not depend on the
                      // lifetime of the caller's matrix
  SolveOptions opt;
  std::string method;
  int n = 0;

  // One of the three backends is active.
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::SparseLU<SpMat> lu;
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu;
  bool use_ldlt = false, use_dense = false;
  int n_aug = 0;

  Eigen::VectorXd raw_solve(const Eigen::VectorXd& b) const {
    if (use_dense) return dense_lu.solve(b);
    if (use_ldlt) return ldlt.solve(b);
    Eigen::VectorXd baug = Eigen::VectorXd::Zero(n_aug);
    baug.head(n) = b;
    return lu.solve(baug).head(n);
  }
};

FactorizedSolver::FactorizedSolver(const SparseSymMatrix& A,
                                   const SolveOptions& opt) {
  impl_ = std::make_unique<Impl>();
  impl_->A = A;
  impl_->opt = opt;
  impl_->n = A.size();

  SolvePath path = opt.path;
  if (path == SolvePath::Explicit &&
      static_cast<long long>(A.size()) * A.size() > 10'000'000)
    throw std::invalid_argument("explicit expansion requested beyond size threshold");

  if (path == SolvePath::Explicit) {
    impl_->use_dense = true;
    impl_->method = "dense-lu";
    impl_->dense_lu.compute(A.dense());
  } else if (A.rank_terms.empty()) {
    // Pure sparse: try the SPD path first, fall back to LU.
    impl_->ldlt.compute(A.base);
    if (impl_->ldlt.info() == Eigen::Success) {
      impl_->use_ldlt = true;
      impl_->method = "simplicial-ldlt";
    }
  }
  if (impl_->method.empty()) {
    const SpMat K = augmented_matrix(A, 0.0);
    impl_->n_aug = static_cast<int>(K.rows());
    impl_->lu.compute(K);
    impl_->method = "sparse-lu-bordered";
    if (impl_->lu.info() != Eigen::Success)
      throw SolverError("sparse factorization failed (singular operator)",
                        near_null_estimate(A));
  }

  // Probe the smallest singular value by a few inverse-power steps; a
  // huge estimated condition number is reported as singularity.
  std::mt19937 rng(911);
  std::normal_distribution<double> dist;
  Eigen::VectorXd z(impl_->n);
  for (int i = 0; i < impl_->n; ++i) z[i] = dist(rng);
  z.normalize();
  double growth = 0.0;
  for (int it = 0; it < 3; ++it) {
    z = impl_->raw_solve(z);
    if (!z.allFinite()) {
      growth = std::numeric_limits<double>::infinity();
      break;
    }
    growth = z.norm();
    if (growth == 0.0) break;
    z /= growth;
  }
  const double cond_est = growth * inf_norm(A);
  if (!(cond_est < opt.singular_cond))
    throw SolverError("operator numerically singular (condition estimate " +
                          std::to_string(cond_est) + ")",
                      z.allFinite() ? z : near_null_estimate(A));
}

FactorizedSolver::~FactorizedSolver() = default;
FactorizedSolver::FactorizedSolver(FactorizedSolver&&) noexcept = default;
FactorizedSolver& FactorizedSolver::operator=(FactorizedSolver&&) noexcept =
    default;

const std::string& FactorizedSolver::method() const { return impl_->method; }

Eigen::VectorXd FactorizedSolver::solve(const Eigen::VectorXd& rhs,
                                        SolveReport* report) const {
  const auto t0 = Clock::now();
  Eigen::VectorXd x = impl_->raw_solve(rhs);
  const double bn = rhs.norm();
  int refinements = 0;
  double rel = 0.0;
  for (;;) {
    const Eigen::VectorXd r = rhs - impl_->A.apply(x);
    rel = bn > 0.0 ? r.norm() / bn : r.norm();
    if (rel <= impl_->opt.tol || refinements >= 3) break;
    x += impl_->raw_solve(r);
    ++refinements;
  }
  if (!(rel <= std::max(impl_->opt.tol, 1e-8)) || !x.allFinite())
    throw SolverError("solve failed to reach tolerance (relative residual " +
                          std::to_string(rel) + ")",
                      near_null_estimate(impl_->A));
  if (report) {
    report->n = impl_->n;
    report->method = impl_->method;
    report->rel_residual = rel;
    report->refinement_steps = refinements;
    report->seconds = seconds_since(t0);
  }
  return x;
}

std::pair<Eigen::VectorXd, SolveReport> solve_spd(const SparseSymMatrix& A,
                                                  const Eigen::VectorXd& rhs,
                                                  const SolveOptions& opt) {
  const auto t0 = Clock::now();
  FactorizedSolver solver(A, opt);
  SolveReport report;
  Eigen::VectorXd x = solver.solve(rhs, &report);
  report.seconds = seconds_since(t0);  // include factorization
  return {std::move(x), report};
}

SparseSymMatrix join_blocks(const SparseSymMatrix& A11, const SpMat& A12,
                            const SparseSymMatrix& A22) {
  const int n1 = A11.size(), n2 = A22.size();
  if (A12.rows() != n1 || A12.cols() != n2)
    throw std::invalid_argument("block size mismatch");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A11.base.nonZeros() + A22.base.nonZeros() + 2 * A12.nonZeros());
  for (int k = 0; k < A11.base.outerSize(); ++k)
    for (SpMat::InnerIterator it(A11.base, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < A22.base.outerSize(); ++k)
    for (SpMat::InnerIterator it(A22.base, k); it; ++it)
      trip.emplace_back(n1 + it.row(), n1 + it.col(), it.value());
  for (int k = 0; k < A12.outerSize(); ++k)
    for (SpMat::InnerIterator it(A12, k); it; ++it) {
      trip.emplace_back(it.row(), n1 + it.col(), it.value());
      trip.emplace_back(n1 + it.col(), it.row(), it.value());
    }
  SparseSymMatrix J(n1 + n2);
  J.base.setFromTriplets(trip.begin(), trip.end());
  for (const auto& rt : A11.rank_terms) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n1 + n2);
    f.head(n1) = rt.factor;
    J.add_rank_one(std::move(f), rt.weight);
  }
  for (const auto& rt : A22.rank_terms) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n1 + n2);
    f.tail(n2) = rt.factor;
    J.add_rank_one(std::move(f), rt.weight);
  }
  return J;
}

BlockSolution solve_block_sym(const SparseSymMatrix& A11, const SpMat& A12,
                              const SparseSymMatrix& A22,
                              const Eigen::VectorXd& b1,
                              const Eigen::VectorXd& b2,
                              const SolveOptions& opt) {
  const auto t0 = Clock::now();
  const SparseSymMatrix J = join_blocks(A11, A12, A22);
  Eigen::VectorXd rhs(J.size());
  rhs.head(A11.size()) = b1;
  rhs.tail(A22.size()) = b2;
  FactorizedSolver solver(J, opt);
  BlockSolution out;
  Eigen::VectorXd x = solver.solve(rhs, &out.report);
  out.report.seconds = seconds_since(t0);
  out.x1 = x.head(A11.size());
  out.x2 = x.tail(A22.size());
  return out;
}

Eigen::VectorXd smallest_eigenvalues(const SpMat& S, const SpMat& M, int k,
                                     double tol, Eigen::MatrixXd* vectors,
                                     double shift) {
  const int n = static_cast<int>(S.rows());
  if (k < 1 || k > n) throw std::invalid_argument("bad eigenvalue count");
  const int p = std::min(n, k + 8);

  Eigen::SimplicialLDLT<SpMat> K;
  K.compute(SpMat(S + shift * M));
  if (K.info() != Eigen::Success)
    throw SolverError("eigen shift factorization failed");

  std::mt19937 rng(7321);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = dist(rng);

  Eigen::VectorXd prev = Eigen::VectorXd::Constant(k, 1e30);
  Eigen::VectorXd evals;
  for (int iter = 0; iter < 400; ++iter) {
    const Eigen::MatrixXd Z = K.solve(M * X);
    // M-orthonormalize the block.
    Eigen::MatrixXd G = Z.transpose() * (M * Z);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (G + G.transpose()));
    if (llt.info() != Eigen::Success)
      throw SolverError("eigen subspace degenerated");
    const Eigen::MatrixXd Q =
        llt.matrixU().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd Zo = Z * Q;
    // Rayleigh-Ritz rotation.
    Eigen::MatrixXd H = Zo.transpose() * (S * Zo);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (H + H.transpose()));
    X = Zo * es.eigenvectors();
    evals = es.eigenvalues();

    const double change =
        (evals.head(k) - prev).cwiseAbs().maxCoeff() /
        std::max(1.0, evals.head(k).cwiseAbs().maxCoeff());
    if (change < tol) break;
    prev = evals.head(k);
  }
  if (vectors) *vectors = X.leftCols(k);
  return evals.head(k);
}

}  // namespace membrane
