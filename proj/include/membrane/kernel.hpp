#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "membrane/fem.hpp"
#include "membrane/geometry.hpp"

namespace membrane {

// Kernel of the second-variation operator.
//
// Sphere: span{1, nu_1, nu_2, nu_3} (dilation + translations); the moment
// fields g coincide with f.  Clifford torus: the eight normal components of
// the conformal Killing fields (translations, two rotations mixing the torus
// axis, dilation, two special conformal directions); g = (lap^2 - lap + 1) f,
// orthonormalized in L2(Gamma).
struct KernelBasis {
  SurfaceSpec surface;
  std::vector<ParamField> f;
  std::vector<ParamField> g_raw;  // before orthonormalization
  std::vector<ParamField> g;     // g[l] = sum_j g_coeffs(j, l) g_raw[j]
  Eigen::MatrixXd g_coeffs;
  Eigen::MatrixXd g_raw_gram;  // exact L2 Gram of g_raw (reused downstream)

  int size() const { return static_cast<int>(f.size()); }
};

KernelBasis kernel_basis(const SurfaceSpec& s);

// Sub-basis of kernel fields vanishing at the given surface points, for
// quotienting the kernel against point constraints.  coeffs has one column
// per surviving direction (over kernel_basis(s).f); g holds the matching
// L2-orthonormalized moment fields, with g_coeffs over kernel_basis(s).g_raw.
struct ConstrainedKernel {
  SurfaceSpec surface;
  Eigen::MatrixXd coeffs;
  std::vector<ParamField> f;
  std::vector<ParamField> g_raw;  // full raw moment basis (copied for reuse)
  std::vector<ParamField> g;
  Eigen::MatrixXd g_coeffs;

  int size() const { return static_cast<int>(f.size()); }
};

ConstrainedKernel constrained_kernel(const SurfaceSpec& s,
                                     const std::vector<Vec3>& points);

// Moment vectors of the combined fields sum_j coeffs(j, l) raw[j]: each raw
// field is swept once and the results are mixed, so l columns cost
// raw.size() sweeps instead of l * raw.size().
std::vector<Eigen::VectorXd> combined_moment_vectors(
    const TriMesh& m, const std::vector<ParamField>& raw,
    const Eigen::MatrixXd& coeffs);

// Discrete energy form a_h acting on nodal vectors.
using AForm =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Near-annihilation of the interpolated kernel by a_h: for each kernel field
// f_i, the residual max_t |a_h(I_h f_i, t)| / (|I_h f_i|_M |t|_M) over 20
// deterministic pseudo-random smooth test vectors t (interpolants of random
// low-degree polynomials in the ambient coordinates).  Residuals decay with
// mesh refinement at the consistency order of the discretization.
std::vector<double> kernel_residuals(const TriMesh& m, const AForm& a_form);

// Max of kernel_residuals.
double verify_kernel(const TriMesh& m, const AForm& a_form);

}  // namespace membrane
