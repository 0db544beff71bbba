#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace membrane {

// Bivariate truncated Taylor polynomial of total degree <= 4 in two
// parameters (u, v), used to evaluate exact derivatives of closed-form
// surface quantities.  Arithmetic is exact on the retained coefficients:
// after k applications of d_du/d_dv only coefficients of total degree
// <= 4 - k remain trustworthy, which is all the callers ever read.
//
// Coefficient c(i,j) stores d^{i+j} f / (du^i dv^j) / (i! j!).
class Taylor2 {
public:
  static constexpr int Order = 4;
  static constexpr int Count = 15;  // (Order+1)(Order+2)/2

  Taylor2() { c_.fill(0.0); }
  /*implicit*/ Taylor2(double value) {
    c_.fill(0.0);
    c_[0] = value;
  }

  // Seed an independent variable: f(u,v) = value + (u or v).
  static Taylor2 variable(double value, int which) {
    Taylor2 t(value);
    t.at(which == 0 ? 1 : 0, which == 0 ? 0 : 1) = 1.0;
    return t;
  }

  static constexpr int index(int i, int j) {
    const int d = i + j;
    return d * (d + 1) / 2 + j;
  }

  double& at(int i, int j) { return c_[index(i, j)]; }
  double at(int i, int j) const { return c_[index(i, j)]; }

  double value() const { return c_[0]; }

  // d^{i+j} f / du^i dv^j (plain derivative, factorials restored).
  double deriv(int i, int j) const {
    static constexpr double fact[5] = {1, 1, 2, 6, 24};
    return c_[index(i, j)] * fact[i] * fact[j];
  }

  Taylor2 operator-() const {
    Taylor2 r;
    for (int k = 0; k < Count; ++k) r.c_[k] = -c_[k];
    return r;
  }

  Taylor2& operator+=(const Taylor2& o) {
    for (int k = 0; k < Count; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Taylor2& operator-=(const Taylor2& o) {
    for (int k = 0; k < Count; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Taylor2& operator*=(double s) {
    for (int k = 0; k < Count; ++k) c_[k] *= s;
    return *this;
  }

  friend Taylor2 operator+(Taylor2 a, const Taylor2& b) { return a += b; }
  friend Taylor2 operator-(Taylor2 a, const Taylor2& b) { return a -= b; }
  friend Taylor2 operator*(Taylor2 a, double s) { return a *= s; }
  friend Taylor2 operator*(double s, Taylor2 a) { return a *= s; }

  friend Taylor2 operator*(const Taylor2& a, const Taylor2& b) {
    Taylor2 r;
    for (int ia = 0; ia <= Order; ++ia)
      for (int ja = 0; ja + ia <= Order; ++ja) {
        const double ca = a.at(ia, ja);
        if (ca == 0.0) continue;
        for (int ib = 0; ib + ia <= Order; ++ib)
          for (int jb = 0; jb + ib + ia + ja <= Order; ++jb)
            r.at(ia + ib, ja + jb) += ca * b.at(ib, jb);
      }
    return r;
  }

  friend Taylor2 operator/(const Taylor2& a, const Taylor2& b) {
    return a * reciprocal(b);
  }
  friend Taylor2 operator/(double a, const Taylor2& b) {
    return Taylor2(a) * reciprocal(b);
  }
  friend Taylor2 operator/(const Taylor2& a, double s) { return a * (1.0 / s); }

  // Composition with a univariate series: given Taylor coefficients
  // t[k] = f^(k)(g(0,0)) / k!, returns the jet of f(g).
  static Taylor2 compose(const Taylor2& g, const std::array<double, Order + 1>& t) {
    Taylor2 dg = g;
    dg.c_[0] = 0.0;
    Taylor2 r(t[Order]);
    for (int k = Order - 1; k >= 0; --k) r = r * dg + Taylor2(t[k]);
    return r;
  }

  friend Taylor2 sin(const Taylor2& g) {
    const double s = std::sin(g.value()), c = std::cos(g.value());
    return compose(g, {s, c, -s / 2, -c / 6, s / 24});
  }
  friend Taylor2 cos(const Taylor2& g) {
    const double s = std::sin(g.value()), c = std::cos(g.value());
    return compose(g, {c, -s, -c / 2, s / 6, c / 24});
  }
  friend Taylor2 sqrt(const Taylor2& g) {
    const double x = g.value();
    const double s = std::sqrt(x);
    return compose(g, {s, 1 / (2 * s), -1 / (8 * s * x), 1 / (16 * s * x * x),
                       -5 / (128 * s * x * x * x)});
  }
  friend Taylor2 reciprocal(const Taylor2& g) {
    const double x = g.value();
    return compose(g, {1 / x, -1 / (x * x), 1 / (x * x * x), -1 / (x * x * x * x),
                       1 / (x * x * x * x * x)});
  }

  Taylor2 pow_int(int n) const {
    Taylor2 r(1.0);
    for (int k = 0; k < n; ++k) r = r * (*this);
    return r;
  }

  // Partial derivatives as jets.  The result's top-degree coefficients are
  // zeroed (they would require degree Order+1 data); each application
  // lowers the trustworthy degree by one.
  Taylor2 d_du() const {
    Taylor2 r;
    for (int i = 1; i <= Order; ++i)
      for (int j = 0; i + j <= Order; ++j) r.at(i - 1, j) = i * at(i, j);
    return r;
  }
  Taylor2 d_dv() const {
    Taylor2 r;
    for (int i = 0; i < Order; ++i)
      for (int j = 1; i + j <= Order; ++j) r.at(i, j - 1) = j * at(i, j);
    return r;
  }

private:
  std::array<double, Count> c_;
};

}  // namespace membrane
