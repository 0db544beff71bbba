#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "membrane/fem.hpp"

namespace membrane {

struct SolveReport {
  int n = 0;
  std::string method;
  double rel_residual = 0.0;
  int refinement_steps = 0;
  double seconds = 0.0;
};

enum class SolvePath {
  Auto,      // factored low-rank handling; SPD fast path when possible
  Factored,  // bordered sparse factorization of [A U; U^T -W^{-1}]
  Explicit,  // dense expansion (cross-check path for small systems)
};

struct SolveOptions {
  double tol = 1e-10;
  SolvePath path = SolvePath::Auto;
  // Condition estimate beyond which the system is reported singular.
  double singular_cond = 1e13;
};

// Carries a normalized estimate of the offending near-null direction when
// a factorization or residual check fails.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, Eigen::VectorXd near_null = {})
      : std::runtime_error(what), near_null_(std::move(near_null)) {}
  const Eigen::VectorXd& near_null() const { return near_null_; }

 private:
  Eigen::VectorXd near_null_;
};

// One-time factorization with repeatable (const, concurrency-safe)
// back-solves; used directly by parameter sweeps.
class FactorizedSolver {
 public:
  FactorizedSolver(const SparseSymMatrix& A, const SolveOptions& opt = {});
  ~FactorizedSolver();
  FactorizedSolver(FactorizedSolver&&) noexcept;
  FactorizedSolver& operator=(FactorizedSolver&&) noexcept;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs,
                        SolveReport* report = nullptr) const;
  const std::string& method() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::pair<Eigen::VectorXd, SolveReport> solve_spd(const SparseSymMatrix& A,
                                                  const Eigen::VectorXd& rhs,
                                                  const SolveOptions& opt = {});

// Symmetric 2x2 block system [A11 A12; A12^T A22] (x1; x2) = (b1; b2).
// Rank-one terms of the diagonal blocks are handled by bordering.
struct BlockSolution {
  Eigen::VectorXd x1, x2;
  SolveReport report;
};

BlockSolution solve_block_sym(const SparseSymMatrix& A11, const SpMat& A12,
                              const SparseSymMatrix& A22,
                              const Eigen::VectorXd& b1,
                              const Eigen::VectorXd& b2,
                              const SolveOptions& opt = {});

// Joins the blocks into one 2n x 2n SparseSymMatrix (factored terms padded
// into the joint index space); exposed for reuse by block factorizations.
SparseSymMatrix join_blocks(const SparseSymMatrix& A11, const SpMat& A12,
                            const SparseSymMatrix& A22);

// Smallest k eigenvalues (ascending) of the pencil S x = lambda M x, with
// S symmetric positive semidefinite and M SPD.  Shifted block inverse
// iteration with Rayleigh-Ritz extraction; deterministic start.
Eigen::VectorXd smallest_eigenvalues(const SpMat& S, const SpMat& M, int k,
                                     double tol = 1e-9,
                                     Eigen::MatrixXd* vectors = nullptr,
                                     double shift = 1.0);

}  // namespace membrane
