#include "membrane/kernel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace membrane {

namespace {

// Torus kernel fields, written in the embedding: with x the position and nu
// the outward normal, the eight normal velocities are
//   translations        nu_1, nu_2, nu_3
//   rotations (axis mix) x_3 nu_1 - x_1 nu_3,  x_3 nu_2 - x_2 nu_3
//   dilation            x . nu
//   special conformal   2 x_r (x . nu) - |x|^2 nu_r,  r = 1, 2.
// (The two in-plane rotations and the remaining special conformal direction
// act trivially on the normal bundle.)
std::vector<ParamField> torus_kernel_fields(const SurfaceSpec& s) {
  const double R = s.radius;
  const double rho = s.ring_radius();

  struct Frame {
    std::array<Taylor2, 3> x, nu;
  };
  auto frame = [R, rho](const Taylor2& th, const Taylor2& ph) {
    Frame fr;
    const Taylor2 st = sin(th), ct = cos(th), sp = sin(ph), cp = cos(ph);
    const Taylor2 w = Taylor2(rho) + R * ct;
    fr.x = {w * cp, w * sp, R * st};
    fr.nu = {ct * cp, ct * sp, st};
    return fr;
  };

  std::vector<ParamField> f;
  for (int k = 0; k < 3; ++k)
    f.push_back([frame, k](const Taylor2& th, const Taylor2& ph) {
      return frame(th, ph).nu[k];
    });
  for (int r = 0; r < 2; ++r)
    f.push_back([frame, r](const Taylor2& th, const Taylor2& ph) {
      const Frame fr = frame(th, ph);
      return fr.x[2] * fr.nu[r] - fr.x[r] * fr.nu[2];
    });
  f.push_back([frame](const Taylor2& th, const Taylor2& ph) {
    const Frame fr = frame(th, ph);
    return fr.x[0] * fr.nu[0] + fr.x[1] * fr.nu[1] + fr.x[2] * fr.nu[2];
  });
  for (int r = 0; r < 2; ++r)
    f.push_back([frame, r](const Taylor2& th, const Taylor2& ph) {
      const Frame fr = frame(th, ph);
      const Taylor2 xdotnu =
          fr.x[0] * fr.nu[0] + fr.x[1] * fr.nu[1] + fr.x[2] * fr.nu[2];
      const Taylor2 xsq =
          fr.x[0] * fr.x[0] + fr.x[1] * fr.x[1] + fr.x[2] * fr.x[2];
      return 2.0 * (fr.x[r] * xdotnu) - xsq * fr.nu[r];
    });
  return f;
}

// (lap^2 - lap + 1) f as a value-only field (the jet carries no derivative
// information: it already spends the full fourth-order budget of f).
ParamField bilap_shift_field(const SurfaceSpec& s, const ParamField& f) {
  return [s, f](const Taylor2& th, const Taylor2& ph) {
    const LapData d = lap_bilap(s, f, th.value(), ph.value());
    return Taylor2(d.bilap - d.lap + d.value);
  };
}

// Exact L2 Gram matrix of the raw fields.  On the torus both parameters are
// 2 pi periodic and the fields are analytic, so a uniform product rule
// converges geometrically; 48 points per direction is already far below
// round-off for these low-frequency fields and is ~100x cheaper than
// adaptive quadrature driven through the fourth-order jet evaluations.
Eigen::MatrixXd l2_gram(const SurfaceSpec& s,
                        const std::vector<ParamField>& raw) {
  const int m = static_cast<int>(raw.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
  if (s.kind == SurfaceKind::CliffordTorus) {
    const int n = 48;
    const double step = 2.0 * std::numbers::pi / n;
    const double R = s.radius, rho = s.ring_radius();
    Eigen::VectorXd vals(m);
    for (int i = 0; i < n; ++i) {
      const double th = step * i;
      const double w = step * step * R * (rho + R * std::cos(th));
      for (int j = 0; j < n; ++j) {
        const double ph = step * j;
        const Taylor2 tj(th), pj(ph);
        for (int k = 0; k < m; ++k) vals[k] = raw[k](tj, pj).value();
        G.selfadjointView<Eigen::Lower>().rankUpdate(vals, w);
      }
    }
    return Eigen::MatrixXd(G.selfadjointView<Eigen::Lower>());
  }
  const int dim = m * (m + 1) / 2;
  std::vector<double> flat(dim);
  integrate_multi(
      s, dim,
      [&](double th, double ph, double* out) {
        std::vector<double> vals(m);
        const Taylor2 tj(th), pj(ph);
        for (int j = 0; j < m; ++j) vals[j] = raw[j](tj, pj).value();
        int idx = 0;
        for (int j = 0; j < m; ++j)
          for (int l = j; l < m; ++l) out[idx++] = vals[j] * vals[l];
      },
      flat.data(), 1e-11);
  int idx = 0;
  for (int j = 0; j < m; ++j)
    for (int l = j; l < m; ++l) {
      G(j, l) = flat[idx];
      G(l, j) = flat[idx];
      ++idx;
    }
  return G;
}

// Modified Gram-Schmidt in coefficient space: returns Z whose columns span
// the same space as Z0's and satisfy Z^T G Z = I.  Twice-through for
// stability in the metric G.
Eigen::MatrixXd mgs_in_metric(const Eigen::MatrixXd& G,
                              const Eigen::MatrixXd& Z0) {
  Eigen::MatrixXd Z = Z0;
  const int l = static_cast<int>(Z.cols());
  for (int k = 0; k < l; ++k) {
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < k; ++j) {
        const double proj = Z.col(k).dot(G * Z.col(j));
        Z.col(k) -= proj * Z.col(j);
      }
    const double nrm = std::sqrt(Z.col(k).dot(G * Z.col(k)));
    if (!(nrm > 1e-12))
      throw std::runtime_error("kernel moment fields are linearly dependent");
    Z.col(k) /= nrm;
  }
  return Z;
}

ParamField combine_fields(std::vector<ParamField> raw, Eigen::VectorXd c) {
  return [raw = std::move(raw), c = std::move(c)](const Taylor2& th,
                                                  const Taylor2& ph) {
    Taylor2 acc;
    for (int j = 0; j < c.size(); ++j)
      if (c[j] != 0.0) acc += c[j] * raw[j](th, ph);
    return acc;
  };
}

}  // namespace

KernelBasis kernel_basis(const SurfaceSpec& s) {
  s.validate();
  KernelBasis kb;
  kb.surface = s;
  if (s.kind == SurfaceKind::Sphere) {
    kb.f.push_back([](const Taylor2&, const Taylor2&) { return Taylor2(1.0); });
    for (int k = 0; k < 3; ++k) kb.f.push_back(normal_component_field(s, k));
    kb.g_raw = kb.f;
    kb.g = kb.f;
    kb.g_coeffs = Eigen::MatrixXd::Identity(4, 4);
    // closed-form Gram of {1, nu_1, nu_2, nu_3}
    const double area = 4.0 * std::numbers::pi * s.radius * s.radius;
    kb.g_raw_gram = Eigen::Vector4d(area, area / 3, area / 3, area / 3)
                        .asDiagonal();
    return kb;
  }
  kb.f = torus_kernel_fields(s);
  for (const ParamField& f : kb.f) kb.g_raw.push_back(bilap_shift_field(s, f));
  kb.g_raw_gram = l2_gram(s, kb.g_raw);
  const Eigen::MatrixXd& G = kb.g_raw_gram;
  kb.g_coeffs =
      mgs_in_metric(G, Eigen::MatrixXd::Identity(kb.size(), kb.size()));
  for (int l = 0; l < kb.size(); ++l)
    kb.g.push_back(combine_fields(kb.g_raw, kb.g_coeffs.col(l)));
  return kb;
}

ConstrainedKernel constrained_kernel(const SurfaceSpec& s,
                                     const std::vector<Vec3>& points) {
  const KernelBasis kb = kernel_basis(s);
  const int m = kb.size();
  const int n = static_cast<int>(points.size());

  ConstrainedKernel ck;
  ck.surface = s;
  ck.g_raw = kb.g_raw;

  Eigen::MatrixXd V(n, m);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < m; ++i)
      V(k, i) = field_value(s, kb.f[i], closest_point(s, points[k]));

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() > 0
                          ? svd.singularValues()(0)
                          : 0.0;
  const double tol = 1e-10 * std::max(smax, 1.0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;

  const int l = m - rank;
  ck.coeffs = svd.matrixV().rightCols(l);
  if (l == 0) {
    ck.g_coeffs.resize(m, 0);
    return ck;
  }
  for (int j = 0; j < l; ++j)
    ck.f.push_back(combine_fields(kb.f, ck.coeffs.col(j)));

  // The same combinations of the raw moment fields, then orthonormalized.
  ck.g_coeffs = mgs_in_metric(kb.g_raw_gram, ck.coeffs);
  for (int j = 0; j < l; ++j)
    ck.g.push_back(combine_fields(kb.g_raw, ck.g_coeffs.col(j)));
  return ck;
}

std::vector<Eigen::VectorXd> combined_moment_vectors(
    const TriMesh& m, const std::vector<ParamField>& raw,
    const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != static_cast<Eigen::Index>(raw.size()))
    throw std::invalid_argument("coefficient rows must match raw field count");
  const SurfaceSpec& s = m.surface;
  std::vector<Eigen::VectorXd> raw_moments;
  raw_moments.reserve(raw.size());
  for (const ParamField& g : raw)
    raw_moments.push_back(
        moment_vector(m, [&](const Vec3& x) { return field_value(s, g, x); }));
  std::vector<Eigen::VectorXd> out;
  for (int l = 0; l < coeffs.cols(); ++l) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m.n_vertices());
    for (int j = 0; j < coeffs.rows(); ++j)
      if (coeffs(j, l) != 0.0) b += coeffs(j, l) * raw_moments[j];
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

// Deterministic smooth test vectors: interpolants of random quadratic-ish
// polynomials in the scaled embedding coordinates.  Smoothness matters: the
// consistency error of a_h against a kernel interpolant is only small when
// paired with discrete functions that sample a smooth field.
std::vector<Eigen::VectorXd> smooth_test_vectors(const TriMesh& m, int count,
                                                 unsigned seed) {
  const SurfaceSpec& s = m.surface;
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double r = s.kind == SurfaceKind::Sphere ? s.radius
                                                 : s.radius + s.ring_radius();
  std::vector<Eigen::VectorXd> out;
  for (int t = 0; t < count; ++t) {
    std::array<double, 10> c;
    for (double& v : c) v = gauss(rng);
    const ParamField field = cartesian_field(
        s, [c, r](const Taylor2& xr, const Taylor2& yr, const Taylor2& zr) {
          const Taylor2 x = xr / r, y = yr / r, z = zr / r;
          return Taylor2(c[0]) + c[1] * x + c[2] * y + c[3] * z +
                 c[4] * (x * y) + c[5] * (y * z) + c[6] * (z * x) +
                 c[7] * (x * x - y * y) + c[8] * (y * y - z * z) +
                 c[9] * (x * y * z);
        });
    out.push_back(interpolate(m, field));
  }
  return out;
}

}  // namespace

std::vector<double> kernel_residuals(const TriMesh& m, const AForm& a_form) {
  const KernelBasis kb = kernel_basis(m.surface);
  const SpMat mass = assemble_mass(m);
  std::vector<Eigen::VectorXd> tests = smooth_test_vectors(m, 20, 2468u);
  for (Eigen::VectorXd& t : tests) {
    const double nt = l2_norm(mass, t);
    if (nt > 0) t /= nt;
  }
  std::vector<double> res;
  for (const ParamField& f : kb.f) {
    const Eigen::VectorXd z = interpolate(m, f);
    const double nz = l2_norm(mass, z);
    double worst = 0.0;
    for (const Eigen::VectorXd& t : tests)
      worst = std::max(worst, std::abs(a_form(z, t)));
    res.push_back(worst / nz);
  }
  return res;
}

double verify_kernel(const TriMesh& m, const AForm& a_form) {
  const std::vector<double> res = kernel_residuals(m, a_form);
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, r);
  return worst;
}

}  // namespace membrane
