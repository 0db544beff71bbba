#include "membrane/geometry.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace membrane {

namespace {

constexpr double kPi = std::numbers::pi;

using Jet3 = std::array<Taylor2, 3>;

Jet3 cross(const Jet3& a, const Jet3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

Taylor2 dot(const Jet3& a, const Jet3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Embedding and first-fundamental-form jets at a parameter point.  All
// surface differential operators are assembled from these; trustworthy
// derivative order decays by one per application of d_du/d_dv, which the
// call sites stay within (order 4 suffices for one bilaplacian).
struct JetFrame {
  Jet3 X, Xu, Xv, nu;
  Taylor2 E, F, G, det, sqdet;
  Taylor2 iuu, iuv, ivv;  // inverse metric

  static JetFrame at(const SurfaceSpec& s, double theta, double phi) {
    JetFrame fr;
    const Taylor2 th = Taylor2::variable(theta, 0);
    const Taylor2 ph = Taylor2::variable(phi, 1);
    const double R = s.radius;
    double orient = 1.0;
    if (s.kind == SurfaceKind::Sphere) {
      const Taylor2 st = sin(th), ct = cos(th), sp = sin(ph), cp = cos(ph);
      fr.X = {R * st * cp, R * st * sp, R * ct};
    } else {
      const Taylor2 w = Taylor2(s.ring_radius()) + R * cos(th);
      fr.X = {w * cos(ph), w * sin(ph), R * sin(th)};
      orient = -1.0;  // (theta, phi) is inward-oriented on the torus
    }
    for (int k = 0; k < 3; ++k) {
      fr.Xu[k] = fr.X[k].d_du();
      fr.Xv[k] = fr.X[k].d_dv();
    }
    fr.E = dot(fr.Xu, fr.Xu);
    fr.F = dot(fr.Xu, fr.Xv);
    fr.G = dot(fr.Xv, fr.Xv);
    fr.det = fr.E * fr.G - fr.F * fr.F;
    fr.sqdet = sqrt(fr.det);
    const Taylor2 inv = reciprocal(fr.det);
    fr.iuu = fr.G * inv;
    fr.iuv = -1.0 * (fr.F * inv);
    fr.ivv = fr.E * inv;
    Jet3 cr = cross(fr.Xu, fr.Xv);
    const Taylor2 nrm = reciprocal(sqrt(dot(cr, cr)));
    for (int k = 0; k < 3; ++k) fr.nu[k] = orient * (cr[k] * nrm);
    return fr;
  }

  // Tangential gradient of a scalar jet, as three coordinate jets.
  Jet3 grad(const Taylor2& f) const {
    const Taylor2 fu = f.d_du(), fv = f.d_dv();
    const Taylor2 a = iuu * fu + iuv * fv;
    const Taylor2 b = iuv * fu + ivv * fv;
    return {a * Xu[0] + b * Xv[0], a * Xu[1] + b * Xv[1],
            a * Xu[2] + b * Xv[2]};
  }

  Taylor2 lap(const Taylor2& f) const {
    const Taylor2 fu = f.d_du(), fv = f.d_dv();
    const Taylor2 hu = sqdet * (iuu * fu + iuv * fv);
    const Taylor2 hv = sqdet * (iuv * fu + ivv * fv);
    return (hu.d_du() + hv.d_dv()) / sqdet;
  }
};

FieldCalc field_calc_frame(const JetFrame& fr, const ParamField& f,
                           double theta, double phi, bool with_bilap) {
  const Taylor2 th = Taylor2::variable(theta, 0);
  const Taylor2 ph = Taylor2::variable(phi, 1);
  const Taylor2 fj = f(th, ph);

  FieldCalc out;
  out.value = fj.value();
  const Jet3 g = fr.grad(fj);
  for (int k = 0; k < 3; ++k) out.grad[k] = g[k].value();
  for (int b = 0; b < 3; ++b) {
    const Jet3 gg = fr.grad(g[b]);
    for (int a = 0; a < 3; ++a) out.hess(a, b) = gg[a].value();
  }
  const Taylor2 lj = fr.lap(fj);
  out.lap = lj.value();
  if (with_bilap) out.bilap = fr.lap(lj).value();
  return out;
}

CurvatureData curvature_from_frame(const JetFrame& fr) {
  CurvatureData c;
  Mat3 shape;
  Taylor2 hj;
  std::array<Jet3, 3> gn;
  for (int b = 0; b < 3; ++b) {
    gn[b] = fr.grad(fr.nu[b]);
    for (int a = 0; a < 3; ++a) shape(a, b) = gn[b][a].value();
    hj += gn[b][b];
  }
  c.shape = 0.5 * (shape + shape.transpose());
  c.h_mean = hj.value();
  c.shape_norm_sq = c.shape.squaredNorm();
  c.shape_tr3 = (c.shape * c.shape * c.shape).trace();

  // |shape|^2 as a jet, for its surface Laplacian.
  Taylor2 nsq;
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) nsq += gn[b][a] * gn[b][a];
  c.lap_shape_norm_sq = fr.lap(nsq).value();

  const Jet3 gh = fr.grad(hj);
  for (int k = 0; k < 3; ++k) c.grad_h[k] = gh[k].value();
  c.grad_h_sq = c.grad_h.squaredNorm();

  Mat3 hessH;
  for (int b = 0; b < 3; ++b) {
    const Jet3 ghb = fr.grad(gh[b]);
    for (int a = 0; a < 3; ++a) hessH(a, b) = ghb[a].value();
  }
  c.hess_h_shape = (hessH.array() * c.shape.array()).sum();
  return c;
}

CurvatureData sphere_curvature(const SurfaceSpec& s, const Vec3& x) {
  // Constant-curvature closed forms; valid at the parametrization poles
  // where the coordinate frame degenerates.
  const double R = s.radius;
  const Vec3 n = x.normalized();
  CurvatureData c;
  c.shape = (Mat3::Identity() - n * n.transpose()) / R;
  c.h_mean = 2.0 / R;
  c.shape_norm_sq = 2.0 / (R * R);
  c.shape_tr3 = 2.0 / (R * R * R);
  return c;
}

struct QuadRule {
  std::vector<double> node, weight;
};

const QuadRule& cached_rule(int n) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  QuadRule r;
  for (auto [x, w] : gauss_legendre(n)) {
    r.node.push_back(x);
    r.weight.push_back(w);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace

double SurfaceSpec::ring_radius() const { return radius * std::numbers::sqrt2; }

void SurfaceSpec::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("surface radius must be positive");
  if (!(kappa > 0.0)) throw std::invalid_argument("bending modulus must be positive");
  if (sigma < 0.0) throw std::invalid_argument("surface tension must be nonnegative");
  if (kind == SurfaceKind::CliffordTorus && sigma != 0.0)
    throw std::invalid_argument("tension-on-torus unsupported");
}

Vec3 surface_point(const SurfaceSpec& s, double theta, double phi) {
  const double R = s.radius;
  if (s.kind == SurfaceKind::Sphere)
    return {R * std::sin(theta) * std::cos(phi),
            R * std::sin(theta) * std::sin(phi), R * std::cos(theta)};
  const double w = s.ring_radius() + R * std::cos(theta);
  return {w * std::cos(phi), w * std::sin(phi), R * std::sin(theta)};
}

ParamPoint param_of(const SurfaceSpec& s, const Vec3& x) {
  ParamPoint p;
  if (s.kind == SurfaceKind::Sphere) {
    const double r = x.norm();
    if (r == 0.0) throw std::domain_error("parameters undefined at sphere center");
    p.theta = std::acos(std::clamp(x[2] / r, -1.0, 1.0));
    p.phi = std::atan2(x[1], x[0]);
  } else {
    const double axial = std::hypot(x[0], x[1]);
    if (axial == 0.0) throw std::domain_error("parameters undefined on torus axis");
    p.phi = std::atan2(x[1], x[0]);
    p.theta = std::atan2(x[2], axial - s.ring_radius());
  }
  if (p.phi < 0.0) p.phi += 2.0 * kPi;
  if (p.theta < 0.0) p.theta += 2.0 * kPi;
  return p;
}

Vec3 normal(const SurfaceSpec& s, const Vec3& x) {
  const double tiny = 1e-12 * s.radius;  // degenerate-set guard
  if (s.kind == SurfaceKind::Sphere) {
    const double r = x.norm();
    if (r <= tiny) throw std::domain_error("normal undefined at sphere center");
    return x / r;
  }
  const double axial = std::hypot(x[0], x[1]);
  if (axial <= tiny) throw std::domain_error("normal undefined on torus axis");
  const double rho = s.ring_radius();
  const Vec3 c{rho * x[0] / axial, rho * x[1] / axial, 0.0};
  const Vec3 d = x - c;
  const double dn = d.norm();
  if (dn <= tiny)
    throw std::domain_error("normal undefined on torus centerline");
  return d / dn;
}

Vec3 closest_point(const SurfaceSpec& s, const Vec3& x) {
  const double tiny = 1e-12 * s.radius;
  if (s.kind == SurfaceKind::Sphere) {
    const double r = x.norm();
    if (r <= tiny)
      throw std::domain_error("projection undefined at sphere center");
    return (s.radius / r) * x;
  }
  const double axial = std::hypot(x[0], x[1]);
  if (axial <= tiny)
    throw std::domain_error("projection undefined on torus axis");
  const double rho = s.ring_radius();
  const Vec3 c{rho * x[0] / axial, rho * x[1] / axial, 0.0};
  const Vec3 d = x - c;
  const double dn = d.norm();
  if (dn <= tiny)
    throw std::domain_error("projection undefined on torus centerline");
  return c + (s.radius / dn) * d;
}

CurvatureData curvature(const SurfaceSpec& s, const Vec3& x) {
  if (s.kind == SurfaceKind::Sphere) return sphere_curvature(s, x);
  const ParamPoint p = param_of(s, x);
  return curvature_from_frame(JetFrame::at(s, p.theta, p.phi));
}

double willmore_residual(const SurfaceSpec& s, const Vec3& x) {
  if (s.kind == SurfaceKind::Sphere) {
    const double H = 2.0 / s.radius;
    return (2.0 / (s.radius * s.radius)) * H - 0.5 * H * H * H;
  }
  const ParamPoint p = param_of(s, x);
  const JetFrame fr = JetFrame::at(s, p.theta, p.phi);
  Taylor2 hj;
  for (int b = 0; b < 3; ++b) hj += fr.grad(fr.nu[b])[b];
  const CurvatureData c = curvature_from_frame(fr);
  return fr.lap(hj).value() + c.shape_norm_sq * c.h_mean -
         0.5 * c.h_mean * c.h_mean * c.h_mean;
}

ParamField cartesian_field(
    const SurfaceSpec& s,
    std::function<Taylor2(const Taylor2&, const Taylor2&, const Taylor2&)> f) {
  const double R = s.radius;
  if (s.kind == SurfaceKind::Sphere)
    return [R, f = std::move(f)](const Taylor2& th, const Taylor2& ph) {
      const Taylor2 st = sin(th);
      return f(R * st * cos(ph), R * st * sin(ph), R * cos(th));
    };
  const double rho = s.ring_radius();
  return [R, rho, f = std::move(f)](const Taylor2& th, const Taylor2& ph) {
    const Taylor2 w = Taylor2(rho) + R * cos(th);
    return f(w * cos(ph), w * sin(ph), R * sin(th));
  };
}

ParamField normal_component_field(const SurfaceSpec& s, int axis) {
  if (s.kind == SurfaceKind::Sphere)
    return [axis](const Taylor2& th, const Taylor2& ph) {
      switch (axis) {
        case 0: return sin(th) * cos(ph);
        case 1: return sin(th) * sin(ph);
        default: return cos(th);
      }
    };
  return [axis](const Taylor2& th, const Taylor2& ph) {
    switch (axis) {
      case 0: return cos(th) * cos(ph);
      case 1: return cos(th) * sin(ph);
      default: return sin(th);
    }
  };
}

double field_value(const SurfaceSpec& s, const ParamField& f, const Vec3& x) {
  const ParamPoint p = param_of(s, x);
  return f(Taylor2(p.theta), Taylor2(p.phi)).value();
}

FieldCalc field_calc(const SurfaceSpec& s, const ParamField& f, double theta,
                     double phi, bool with_bilap) {
  return field_calc_frame(JetFrame::at(s, theta, phi), f, theta, phi, with_bilap);
}

LapData lap_bilap(const SurfaceSpec& s, const ParamField& f, double theta,
                  double phi) {
  const JetFrame fr = JetFrame::at(s, theta, phi);
  const Taylor2 fj = f(Taylor2::variable(theta, 0), Taylor2::variable(phi, 1));
  const Taylor2 lj = fr.lap(fj);
  LapData out;
  out.value = fj.value();
  out.lap = lj.value();
  out.bilap = fr.lap(lj).value();
  return out;
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be positive");
  std::vector<std::pair<double, double>> rule(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n and P_n' by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
  }
  return rule;
}

void integrate_multi(const SurfaceSpec& s, int dim,
                     const std::function<void(double, double, double*)>& f,
                     double* out, double rel_tol) {
  const double th_hi = (s.kind == SurfaceKind::Sphere) ? kPi : 2.0 * kPi;
  const double R = s.radius, rho = s.ring_radius();

  std::vector<double> prev(dim, 0.0), cur(dim), buf(dim);
  bool have_prev = false;
  for (int n = 8; n <= 512; n *= 2) {
    const QuadRule& q = cached_rule(n);
    std::fill(cur.begin(), cur.end(), 0.0);
    double abs_scale = 0.0;
    for (int i = 0; i < n; ++i) {
      const double th = 0.5 * th_hi * (q.node[i] + 1.0);
      const double wth = 0.5 * th_hi * q.weight[i];
      const double elem = (s.kind == SurfaceKind::Sphere)
                              ? R * R * std::sin(th)
                              : R * (rho + R * std::cos(th));
      for (int j = 0; j < n; ++j) {
        const double ph = kPi * (q.node[j] + 1.0);
        const double w = wth * kPi * q.weight[j] * elem;
        f(th, ph, buf.data());
        for (int d = 0; d < dim; ++d) {
          cur[d] += w * buf[d];
          abs_scale += std::abs(w * buf[d]);
        }
      }
    }
    if (have_prev) {
      bool ok = true;
      for (int d = 0; d < dim; ++d) {
        const double tol =
            rel_tol * std::max(std::abs(cur[d]), 1e-6 * abs_scale + 1e-300);
        if (std::abs(cur[d] - prev[d]) > tol) ok = false;
      }
      if (ok) break;
    }
    prev = cur;
    have_prev = true;
  }
  std::copy(cur.begin(), cur.end(), out);
}

double integrate(const SurfaceSpec& s,
                 const std::function<double(double, double)>& f,
                 double rel_tol) {
  double out = 0.0;
  integrate_multi(
      s, 1, [&f](double th, double ph, double* o) { o[0] = f(th, ph); }, &out,
      rel_tol);
  return out;
}

VariationFunctionals variation_functionals(const SurfaceSpec& s,
                                           const ParamField& u,
                                           const ParamField& g) {
  double vals[6];
  integrate_multi(
      s, 6,
      [&](double th, double ph, double* o) {
        const JetFrame fr = JetFrame::at(s, th, ph);
        const FieldCalc fu = field_calc_frame(fr, u, th, ph, false);
        const FieldCalc fg = field_calc_frame(fr, g, th, ph, false);
        const CurvatureData c = (s.kind == SurfaceKind::Sphere)
                                    ? sphere_curvature(s, surface_point(s, th, ph))
                                    : curvature_from_frame(fr);
        const double H = c.h_mean, nsq = c.shape_norm_sq;
        o[0] = -H * (fu.lap + nsq * fu.value - 0.5 * H * H * fu.value);
        o[1] = fu.value * H;
        o[2] = fu.value;
        const double shape_hu = (c.shape.array() * fu.hess.array()).sum();
        const double shape_hg = (c.shape.array() * fg.hess.array()).sum();
        o[3] = (fg.lap + nsq * fg.value) * (fu.lap + nsq * fu.value) +
               2.0 * H * (fg.value * shape_hu + fu.value * shape_hg) +
               2.0 * H * (c.shape * fu.grad).dot(fg.grad) -
               1.5 * H * H * fu.grad.dot(fg.grad) -
               1.5 * H * H * (fu.value * fg.lap + fg.value * fu.lap) +
               (2.0 * H * c.shape_tr3 - 2.5 * H * H * nsq +
                0.5 * H * H * H * H) *
                   fu.value * fg.value;
        o[4] = fu.grad.dot(fg.grad) + (H * H - nsq) * fu.value * fg.value;
        o[5] = H * fg.value * fu.value;
      },
      vals, 1e-10);
  VariationFunctionals v;
  v.willmore1 = vals[0];
  v.area1 = vals[1];
  v.volume1 = vals[2];
  v.willmore2 = vals[3];
  v.area2 = vals[4];
  v.volume2 = vals[5];
  return v;
}

}  // namespace membrane
