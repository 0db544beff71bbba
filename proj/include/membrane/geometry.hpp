#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

#include "membrane/taylor.hpp"

namespace membrane {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class SurfaceKind { Sphere, CliffordTorus };

// Reference surface plus physical parameters of the energy
//   E = kappa/2 * integral(H^2) + sigma * area.
// For the torus `radius` is the tube radius; the centerline radius is
// radius*sqrt(2) (the Clifford ratio), and tension is unsupported there.
struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::Sphere;
  double radius = 1.0;
  double kappa = 1.0;
  double sigma = 0.0;

  double ring_radius() const;
  void validate() const;  // throws std::invalid_argument
};

struct ParamPoint {
  double theta = 0.0;
  double phi = 0.0;
};

// Pointwise curvature bundle. `shape` is the extended Weingarten map
// (tangential gradient of the outward normal), a symmetric 3x3 matrix
// annihilating the normal.  H is the sum of principal curvatures.
struct CurvatureData {
  double h_mean = 0.0;
  Mat3 shape = Mat3::Zero();
  double shape_norm_sq = 0.0;      // |shape|^2 (Frobenius)
  double shape_tr3 = 0.0;          // tr(shape^3)
  Vec3 grad_h = Vec3::Zero();      // tangential gradient of H
  double grad_h_sq = 0.0;
  double lap_shape_norm_sq = 0.0;  // Laplace-Beltrami of |shape|^2
  double hess_h_shape = 0.0;       // (tangential Hessian of H) : shape
};

Vec3 surface_point(const SurfaceSpec& s, double theta, double phi);
ParamPoint param_of(const SurfaceSpec& s, const Vec3& x);

// Outward unit normal / closest point on the surface.  Both throw
// std::domain_error when x lies on the degenerate set (sphere center;
// torus axis or centerline circle).
Vec3 normal(const SurfaceSpec& s, const Vec3& x);
Vec3 closest_point(const SurfaceSpec& s, const Vec3& x);

CurvatureData curvature(const SurfaceSpec& s, const Vec3& x);

// Residual of the constrained Willmore stationarity equation
//   lap(H) + |shape|^2 H - H^3/2 = 0,
// identically zero on round spheres and the Clifford torus; evaluated
// honestly from the curvature bundle as a self-check of the geometry.
double willmore_residual(const SurfaceSpec& s, const Vec3& x);

// Scalar fields given analytically in surface parameters.  Evaluation on
// Taylor2 jets yields exact derivatives up to fourth order.
using ParamField = std::function<Taylor2(const Taylor2& theta, const Taylor2& phi)>;

// Wraps a closed-form function of the embedding coordinates as a ParamField.
ParamField cartesian_field(
    const SurfaceSpec& s,
    std::function<Taylor2(const Taylor2&, const Taylor2&, const Taylor2&)> f);

// Component of the outward normal as an analytic field (axis = 0,1,2).
ParamField normal_component_field(const SurfaceSpec& s, int axis);

double field_value(const SurfaceSpec& s, const ParamField& f, const Vec3& x);

// Pointwise differential data of a field: tangential gradient, tangential
// Hessian (rows and columns respect the usual tangential-derivative
// conventions), Laplace-Beltrami and, optionally, its square.
struct FieldCalc {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
  double lap = 0.0;
  double bilap = 0.0;  // valid only when requested
};

FieldCalc field_calc(const SurfaceSpec& s, const ParamField& f, double theta,
                     double phi, bool with_bilap = false);

// Value, Laplace-Beltrami and bilaplacian only — skips the Hessian work;
// the workhorse for fourth-order right-hand-side fields.
struct LapData {
  double value = 0.0;
  double lap = 0.0;
  double bilap = 0.0;
};
LapData lap_bilap(const SurfaceSpec& s, const ParamField& f, double theta,
                  double phi);

// Gauss-Legendre rule on [-1,1]: (node, weight) pairs.
std::vector<std::pair<double, double>> gauss_legendre(int n);

// Integral over the surface of f(theta, phi) (area element handled
// internally).  Tensor Gauss-Legendre with order doubling until the
// relative change drops below rel_tol.
double integrate(const SurfaceSpec& s,
                 const std::function<double(double, double)>& f,
                 double rel_tol = 1e-9);

// Same, for dim integrands evaluated at once: f(theta, phi, out).
void integrate_multi(const SurfaceSpec& s, int dim,
                     const std::function<void(double, double, double*)>& f,
                     double* out, double rel_tol = 1e-9);

// First and second variations of Willmore energy, area and enclosed
// volume at the reference surface, in normal directions u*nu (first
// variations) and the pair (u*nu, g*nu) (second variations).  The
// integrated-by-parts symmetric forms are used throughout.
struct VariationFunctionals {
  double willmore1 = 0.0;
  double area1 = 0.0;
  double volume1 = 0.0;
  double willmore2 = 0.0;
  double area2 = 0.0;
  double volume2 = 0.0;
};

VariationFunctionals variation_functionals(const SurfaceSpec& s,
                                           const ParamField& u,
                                           const ParamField& g);

}  // namespace membrane
