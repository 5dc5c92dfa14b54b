// Least-squares fitting helpers: straight lines, log-log decay exponents,
// and the power-law limit model f_inf + c * t^(-gamma).
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "qwl/errors.hpp"

namespace qwl {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("fit_line: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// Fitted decay exponent p of f ~ C * t^(-p) from log-log least squares.
// Nonpositive samples are skipped; at least two must survive.
inline double decay_exponent(const std::vector<double>& t, const std::vector<double>& f) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size() && i < f.size(); ++i) {
    if (f[i] > 0.0 && t[i] > 0.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(f[i]));
    }
  }
  if (lx.size() < 2) throw FitError("decay_exponent: fewer than two positive samples");
  return -fit_line(lx, ly).slope;
}

struct LimitFit {
  double f_inf = 0.0;
  double coeff = 0.0;     // c in f_inf + c * t^(-gamma)
  double gamma = 0.0;     // fitted convergence rate
  double error = 0.0;     // |f_inf(all samples) - f_inf(last half)|
  bool two_term = false;  // second-order tail c2 * t^(-2 gamma) engaged
  double coeff2 = 0.0;
};

namespace detail {

struct GammaFit {
  double f_inf, coeff, rss;
};

// For fixed gamma the model is linear in (f_inf, c); solve the 2x2 normal
// equations and report the residual sum of squares.
inline GammaFit limit_fit_at_gamma(const std::vector<double>& t, const std::vector<double>& f,
                                   double gamma) {
  const std::size_t n = t.size();
  double s1 = static_cast<double>(n), sb = 0, sbb = 0, sf = 0, sbf = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double b = std::pow(t[i], -gamma);
    sb += b;
    sbb += b * b;
    sf += f[i];
    sbf += b * f[i];
  }
  double den = s1 * sbb - sb * sb;
  GammaFit g;
  if (std::fabs(den) < 1e-300) {
    g.f_inf = sf / s1;
    g.coeff = 0.0;
  } else {
    g.coeff = (s1 * sbf - sb * sf) / den;
    g.f_inf = (sf - g.coeff * sb) / s1;
  }
  g.rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = f[i] - g.f_inf - g.coeff * std::pow(t[i], -gamma);
    g.rss += r * r;
  }
  return g;
}

inline GammaFit limit_fit_search(const std::vector<double>& t, const std::vector<double>& f,
                                 double& gamma_out) {
  // Coarse deterministic scan over log-spaced gamma, then golden refinement.
  const double g_lo = 0.05, g_hi = 6.0;
  double best_g = g_lo;
  GammaFit best = limit_fit_at_gamma(t, f, g_lo);
  const int kScan = 96;
  for (int i = 1; i <= kScan; ++i) {
    double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / kScan);
    GammaFit cand = limit_fit_at_gamma(t, f, g);
    if (cand.rss < best.rss) {
      best = cand;
      best_g = g;
    }
  }
  double a = best_g / std::pow(g_hi / g_lo, 1.0 / kScan);
  double b = best_g * std::pow(g_hi / g_lo, 1.0 / kScan);
  a = std::max(a, g_lo);
  b = std::min(b, g_hi);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  GammaFit f1 = limit_fit_at_gamma(t, f, x1), f2 = limit_fit_at_gamma(t, f, x2);
  for (int it = 0; it < 80; ++it) {
    if (f1.rss <= f2.rss) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = limit_fit_at_gamma(t, f, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = limit_fit_at_gamma(t, f, x2);
    }
  }
  gamma_out = 0.5 * (a + b);
  return limit_fit_at_gamma(t, f, gamma_out);
}

struct GammaFit2 {
  double f_inf, c1, c2, rss;
};

// Two-term tail f_inf + c1 t^(-gamma) + c2 t^(-2 gamma): 3x3 normal
// equations by Cramer, skipped when the basis degenerates.
inline GammaFit2 limit_fit_at_gamma2(const std::vector<double>& t, const std::vector<double>& f,
                                     double gamma) {
  const std::size_t n = t.size();
  double m[3][3] = {};
  double rhs[3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    double b[3] = {1.0, std::pow(t[i], -gamma), std::pow(t[i], -2.0 * gamma)};
    for (int a = 0; a < 3; ++a) {
      rhs[a] += b[a] * f[i];
      for (int c = 0; c < 3; ++c) m[a][c] += b[a] * b[c];
    }
  }
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  GammaFit2 g{0.0, 0.0, 0.0, std::numeric_limits<double>::infinity()};
  double d = det3(m);
  if (std::fabs(d) < 1e-30) return g;
  double sol[3];
  for (int k = 0; k < 3; ++k) {
    double mk[3][3];
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) mk[a][c] = (c == k) ? rhs[a] : m[a][c];
    sol[k] = det3(mk) / d;
  }
  g.f_inf = sol[0];
  g.c1 = sol[1];
  g.c2 = sol[2];
  g.rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double b = std::pow(t[i], -gamma);
    double r = f[i] - g.f_inf - g.c1 * b - g.c2 * b * b;
    g.rss += r * r;
  }
  return g;
}

inline GammaFit2 limit_fit_search2(const std::vector<double>& t, const std::vector<double>& f,
                                   double& gamma_out) {
  const double g_lo = 0.05, g_hi = 6.0;
  const int kScan = 96;
  double best_g = g_lo;
  GammaFit2 best = limit_fit_at_gamma2(t, f, g_lo);
  for (int i = 1; i <= kScan; ++i) {
    double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / kScan);
    GammaFit2 cand = limit_fit_at_gamma2(t, f, g);
    if (cand.rss < best.rss) {
      best = cand;
      best_g = g;
    }
  }
  double a = std::max(best_g / std::pow(g_hi / g_lo, 1.0 / kScan), g_lo);
  double b = std::min(best_g * std::pow(g_hi / g_lo, 1.0 / kScan), g_hi);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  GammaFit2 f1 = limit_fit_at_gamma2(t, f, x1), f2 = limit_fit_at_gamma2(t, f, x2);
  for (int it = 0; it < 80; ++it) {
    if (f1.rss <= f2.rss) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = limit_fit_at_gamma2(t, f, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = limit_fit_at_gamma2(t, f, x2);
    }
  }
  gamma_out = 0.5 * (a + b);
  return limit_fit_at_gamma2(t, f, gamma_out);
}

}  // namespace detail

// Nonlinear least squares for f(t) = f_inf + c * t^(-gamma).
// Requires >= 4 samples spanning a factor >= 8 in t. The error estimate is
// the shift in f_inf when refitting on the last half of the samples.
// Throws FitError when the fitted gamma is <= 0.2 (no convergence), unless
// the total variation of the samples is already below the resolution band
// (1e-3 of their magnitude); such data has converged as far as it can
// resolve, and the band midpoint is returned with the band as the error.
inline LimitFit fit_limit(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t n = t.size();
  if (n < 4 || f.size() != n) throw DomainError("fit_limit: need >= 4 samples");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(t[i] < t[i + 1])) throw DomainError("fit_limit: times not increasing");
  if (!(t.back() >= 8.0 * t.front()))
    throw DomainError("fit_limit: times must span a factor >= 8");

  LimitFit out;

  // Degenerate constant data: the limit is the common value, exactly.
  double lo = f[0], hi = f[0];
  for (double v : f) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double scale = std::max({std::fabs(lo), std::fabs(hi), 1e-30});
  if (hi - lo <= 1e-14 * scale) {
    out.f_inf = 0.5 * (lo + hi);
    out.coeff = 0.0;
    out.gamma = 6.0;
    out.error = 0.0;
    return out;
  }

  double gamma_all = 0.0;
  detail::GammaFit all = detail::limit_fit_search(t, f, gamma_all);
  if (gamma_all <= 0.2) {
    // The scan collapsing to its floor means the variation has no decaying
    // power shape: drift or noise. If that variation sits inside a narrow
    // band the samples are converged to the band's width; otherwise the
    // data genuinely fails to settle.
    if (hi - lo <= 1e-3 * std::max(scale, 1.0)) {
      out.f_inf = 0.5 * (lo + hi);
      out.coeff = 0.0;
      out.gamma = 6.0;
      out.error = hi - lo;
      return out;
    }
    throw FitError("fit_limit: fitted rate <= 0.2, no convergence");
  }

  std::size_t half = n / 2;
  std::vector<double> t2(t.begin() + half, t.end());
  std::vector<double> f2(f.begin() + half, f.end());
  double f_inf_half;
  if (t2.size() >= 3) {
    double gamma_half = 0.0;
    detail::GammaFit tail = detail::limit_fit_search(t2, f2, gamma_half);
    f_inf_half = tail.f_inf;
  } else {
    f_inf_half = f.back();
  }

  out.f_inf = all.f_inf;
  out.coeff = all.coeff;
  out.gamma = gamma_all;
  out.error = std::fabs(all.f_inf - f_inf_half);

  // Second tail term, engaged only when the single-term residual clears the
  // noise floor by 3x; the f_inf shift between models joins the error.
  const double floor_rms = 1e-9 * (1.0 + std::fabs(all.f_inf));
  if (std::sqrt(all.rss / static_cast<double>(n)) > 3.0 * floor_rms) {
    double gamma_two = 0.0;
    detail::GammaFit2 two = detail::limit_fit_search2(t, f, gamma_two);
    if (two.rss < all.rss && gamma_two > 0.2) {
      out.two_term = true;
      out.f_inf = two.f_inf;
      out.coeff = two.c1;
      out.coeff2 = two.c2;
      out.gamma = gamma_two;
      out.error = std::max(std::fabs(two.f_inf - f_inf_half),
                           std::fabs(two.f_inf - all.f_inf));
    }
  }
  return out;
}

}  // namespace qwl
