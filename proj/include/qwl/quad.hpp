// Adaptive Gauss-Kronrod (G7,K15) quadrature with absolute-error control.
#pragma once

#include <cmath>
#include <functional>

#include "qwl/errors.hpp"

namespace qwl {

namespace detail {

// K15 nodes/weights on [-1,1]; the odd-indexed nodes form the embedded G7 rule.
inline constexpr double kKronrodNode[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kKronrodWeight[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGaussWeight[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& kronrod, double& err) {
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  double fk = 0.0, fg = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      fk += kKronrodWeight[i] * fv;
      fg += kGaussWeight[3] * fv;
    } else {
      double x = hw * kKronrodNode[i];
      fv = f(c - x) + f(c + x);
      fk += kKronrodWeight[i] * fv;
      if (i % 2 == 1) fg += kGaussWeight[i / 2] * fv;
    }
  }
  kronrod = fk * hw;
  err = std::fabs((fk - fg) * hw);
}

}  // namespace detail

// Integral of f over [a, b] to absolute tolerance abs_tol.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10) {
  if (a == b) return 0.0;
  struct Seg {
    double a, b, val, err;
  };
  double v0, e0;
  detail::gk15(f, a, b, v0, e0);
  if (e0 <= abs_tol) return v0;

  std::function<double(double, double, double)> refine = [&](double lo, double hi,
                                                             double tol) -> double {
    double mid = 0.5 * (lo + hi);
    double vl, el, vr, er;
    detail::gk15(f, lo, mid, vl, el);
    detail::gk15(f, mid, hi, vr, er);
    if (el + er <= tol || (hi - lo) < 1e-14 * (std::fabs(lo) + std::fabs(hi) + 1.0)) {
      if (el + er > tol && el + er > 50.0 * abs_tol)
        throw QuadratureError("integrate: interval collapsed before reaching tolerance");
      return vl + vr;
    }
    return refine(lo, mid, 0.5 * tol) + refine(mid, hi, 0.5 * tol);
  };
  return refine(a, b, abs_tol);
}

}  // namespace qwl
