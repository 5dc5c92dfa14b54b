// Embedded Cash-Karp Runge-Kutta 4(5) with adaptive step control.
// One integrator serves the geodesic/transport ODEs, the reduced system,
// and the characteristic rays; all are smooth and nonstiff.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "qwl/errors.hpp"

namespace qwl {

struct Rk45Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

namespace detail {

// Cash-Karp tableau.
inline constexpr double kA21 = 1.0 / 5.0;
inline constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
inline constexpr double kA41 = 3.0 / 10.0, kA42 = -9.0 / 10.0, kA43 = 6.0 / 5.0;
inline constexpr double kA51 = -11.0 / 54.0, kA52 = 5.0 / 2.0, kA53 = -70.0 / 27.0,
                        kA54 = 35.0 / 27.0;
inline constexpr double kA61 = 1631.0 / 55296.0, kA62 = 175.0 / 512.0, kA63 = 575.0 / 13824.0,
                        kA64 = 44275.0 / 110592.0, kA65 = 253.0 / 4096.0;
inline constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 3.0 / 5.0, kC5 = 1.0,
                        kC6 = 7.0 / 8.0;
inline constexpr double kB1 = 37.0 / 378.0, kB3 = 250.0 / 621.0, kB4 = 125.0 / 594.0,
                        kB6 = 512.0 / 1771.0;
inline constexpr double kE1 = 37.0 / 378.0 - 2825.0 / 27648.0;
inline constexpr double kE3 = 250.0 / 621.0 - 18575.0 / 48384.0;
inline constexpr double kE4 = 125.0 / 594.0 - 13525.0 / 55296.0;
inline constexpr double kE5 = -277.0 / 14336.0;
inline constexpr double kE6 = 512.0 / 1771.0 - 1.0 / 4.0;

}  // namespace detail

// One trial Cash-Karp step of size h from (s, y). Returns the 5th-order
// advance in y_out and the per-component embedded error estimate in err_out.
template <std::size_t N, class F>
void rk45_step(F&& f, double s, const std::array<double, N>& y, double h,
               std::array<double, N>& y_out, std::array<double, N>& err_out) {
  using namespace detail;
  std::array<double, N> k1, k2, k3, k4, k5, k6, tmp;
  f(s, y, k1);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * kA21 * k1[i];
  f(s + kC2 * h, tmp, k2);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
  f(s + kC3 * h, tmp, k3);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
  f(s + kC4 * h, tmp, k4);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
  f(s + kC5 * h, tmp, k5);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] =
        y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] + kA65 * k5[i]);
  f(s + kC6 * h, tmp, k6);
  for (std::size_t i = 0; i < N; ++i) {
    y_out[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB6 * k6[i]);
    err_out[i] =
        h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i]);
  }
}

namespace detail {

template <std::size_t N>
double error_ratio(const std::array<double, N>& y, const std::array<double, N>& y_new,
                   const std::array<double, N>& err, const Rk45Options& opt) {
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double scale =
        opt.abs_tol + opt.rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
    double r = std::fabs(err[i]) / scale;
    if (r > worst) worst = r;
  }
  return worst;
}

}  // namespace detail

// Integrate dy/ds = f(s, y) over [s0, s1]; obs(s, y) fires at s0 and after
// every accepted step (including the exact landing on s1).
// accept(s_new, y_new) may veto an otherwise-converged step (used by the
// geodesic tracer to reject on null-residual growth); a veto halves h.
template <std::size_t N, class F, class Obs, class Accept>
void rk45_span(F&& f, std::array<double, N>& y, double s0, double s1, const Rk45Options& opt,
               Obs&& obs, Accept&& accept) {
  const double dir = (s1 >= s0) ? 1.0 : -1.0;
  double s = s0;
  double h = dir * std::min(std::fabs(opt.h_init), std::fabs(s1 - s0));
  obs(s, y);
  std::array<double, N> y_new, err;
  long steps = 0;
  while (dir * (s1 - s) > 0.0) {
    if (++steps > opt.max_steps) throw StabilityError("rk45: step budget exhausted");
    if (dir * (s + h) > dir * s1) h = s1 - s;
    rk45_step(f, s, y, h, y_new, err);
    double ratio = detail::error_ratio(y, y_new, err, opt);
    bool ok = ratio <= 1.0;
    if (ok && !accept(s + h, y_new)) {
      ok = false;
      ratio = 16.0;  // forces at least a halving below
    }
    if (ok) {
      s += h;
      y = y_new;
      obs(s, y);
      double grow = (ratio > 1e-12) ? 0.9 * std::pow(ratio, -0.2) : 5.0;
      h *= std::min(5.0, std::max(0.2, grow));
    } else {
      double shrink = 0.9 * std::pow(ratio, -0.25);
      h *= std::max(0.1, std::min(0.5, shrink));
    }
    if (std::fabs(h) > opt.h_max) h = dir * opt.h_max;
    if (std::fabs(h) < opt.h_min)
      throw StabilityError("rk45: step size underflow");
    for (std::size_t i = 0; i < N; ++i)
      if (!std::isfinite(y[i])) throw StabilityError("rk45: non-finite state");
  }
}

template <std::size_t N, class F, class Obs>
void rk45_span(F&& f, std::array<double, N>& y, double s0, double s1, const Rk45Options& opt,
               Obs&& obs) {
  rk45_span(f, y, s0, s1, opt, obs,
            [](double, const std::array<double, N>&) { return true; });
}

// Integrate forward in s until the monitored component comp(y) (strictly
// increasing along the flow) reaches `target`; lands on it to ~1e-14
// relative by bisecting the final step. Returns the final s.
template <std::size_t N, class F, class Comp, class Obs, class Accept>
double rk45_to_target(F&& f, std::array<double, N>& y, double s0, Comp&& comp, double target,
                      const Rk45Options& opt, Obs&& obs, Accept&& accept) {
  double s = s0;
  double h = opt.h_init;
  obs(s, y);
  std::array<double, N> y_new, err;
  long steps = 0;
  const double land_tol = 1e-13 * std::max(1.0, std::fabs(target));
  while (comp(y) < target - land_tol) {
    if (++steps > opt.max_steps) throw StabilityError("rk45: step budget exhausted");
    rk45_step(f, s, y, h, y_new, err);
    double ratio = detail::error_ratio(y, y_new, err, opt);
    bool ok = ratio <= 1.0;
    if (ok && !accept(s + h, y_new)) {
      ok = false;
      ratio = 16.0;
    }
    if (ok && comp(y_new) > target + land_tol) {
      // Overshoot: bisect the step size so the step lands on the target.
      double lo = 0.0, hi = h;
      std::array<double, N> y_try, err_try;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        rk45_step(f, s, y, mid, y_try, err_try);
        if (comp(y_try) > target)
          hi = mid;
        else
          lo = mid;
        if (hi - lo < 1e-16 * std::max(1.0, std::fabs(h))) break;
      }
      double h_land = 0.5 * (lo + hi);
      rk45_step(f, s, y, h_land, y_new, err);
      s += h_land;
      y = y_new;
      obs(s, y);
      break;
    }
    if (ok) {
      s += h;
      y = y_new;
      obs(s, y);
      double grow = (ratio > 1e-12) ? 0.9 * std::pow(ratio, -0.2) : 5.0;
      h *= std::min(5.0, std::max(0.2, grow));
    } else {
      double shrink = 0.9 * std::pow(ratio, -0.25);
      h *= std::max(0.1, std::min(0.5, shrink));
    }
    if (h > opt.h_max) h = opt.h_max;
    if (h < opt.h_min) throw StabilityError("rk45: step size underflow");
    for (std::size_t i = 0; i < N; ++i)
      if (!std::isfinite(y[i])) throw StabilityError("rk45: non-finite state");
  }
  return s;
}

template <std::size_t N, class F, class Comp, class Obs>
double rk45_to_target(F&& f, std::array<double, N>& y, double s0, Comp&& comp, double target,
                      const Rk45Options& opt, Obs&& obs) {
  return rk45_to_target(f, y, s0, comp, target, opt, obs,
                        [](double, const std::array<double, N>&) { return true; });
}

}  // namespace qwl
