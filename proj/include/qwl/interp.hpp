// Cubic interpolation utilities: shape-preserving (Fritsch-Butland) tables
// for scattering-data curves, plain Hermite tables for smooth diagnostics,
// and a local 4-point Lagrange cubic for uniform field slices.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qwl/errors.hpp"

namespace qwl {

// Tabulated cubic Hermite interpolant on a strictly increasing grid.
// Slopes are chosen at construction: monotone (Fritsch-Butland) or
// three-point finite differences.
class CubicTable {
public:
  enum class Slopes { Monotone, FiniteDifference };
  enum class OutOfRange { Error, ClampToEnds, Extend };

  CubicTable() = default;
  CubicTable(std::vector<double> x, std::vector<double> y, Slopes slopes,
             OutOfRange policy = OutOfRange::Error)
      : x_(std::move(x)), y_(std::move(y)), policy_(policy) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("CubicTable: need >= 2 nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1])) throw DomainError("CubicTable: grid not increasing");
    m_.resize(n);
    std::vector<double> d(n - 1), dx(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      dx[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / dx[i];
    }
    if (n == 2) {
      m_[0] = m_[1] = d[0];
    } else if (slopes == Slopes::Monotone) {
      m_[0] = d[0];
      m_[n - 1] = d[n - 2];
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
          m_[i] = 0.0;
        } else {
          double w1 = 2.0 * dx[i] + dx[i - 1];
          double w2 = dx[i] + 2.0 * dx[i - 1];
          m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
      }
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        double a = dx[i] / (dx[i - 1] + dx[i]);
        m_[i] = a * d[i - 1] + (1.0 - a) * d[i];
      }
      m_[0] = 2.0 * d[0] - m_[1];
      m_[n - 1] = 2.0 * d[n - 2] - m_[n - 2];
    }
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  std::size_t size() const { return x_.size(); }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

  double operator()(double x) const { return eval(x, nullptr); }

  double eval(double x, double* deriv) const {
    double xq = x;
    if (x < x_.front() || x > x_.back()) {
      switch (policy_) {
        case OutOfRange::Error:
          throw CoverageError("CubicTable: query outside table");
        case OutOfRange::ClampToEnds: {
          if (deriv) *deriv = 0.0;
          return x < x_.front() ? y_.front() : y_.back();
        }
        case OutOfRange::Extend:
          break;  // evaluate the end cubic beyond its interval
      }
    }
    std::size_t i = locate(xq);
    double dx = x_[i + 1] - x_[i];
    double t = (xq - x_[i]) / dx;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    double val = h00 * y_[i] + h10 * dx * m_[i] + h01 * y_[i + 1] + h11 * dx * m_[i + 1];
    if (deriv) {
      double g00 = (6 * t2 - 6 * t) / dx, g10 = 3 * t2 - 4 * t + 1;
      double g01 = (-6 * t2 + 6 * t) / dx, g11 = 3 * t2 - 2 * t;
      *deriv = g00 * y_[i] + g10 * m_[i] + g01 * y_[i + 1] + g11 * m_[i + 1];
    }
    return val;
  }

private:
  std::size_t locate(double x) const {
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

  std::vector<double> x_, y_, m_;
  OutOfRange policy_ = OutOfRange::Error;
};

// Value/derivatives of the local Lagrange cubic through four consecutive
// samples of a uniform grid. `j` indexes the second of the four points and
// `theta` in [0,1] is the offset from node j in units of h; callers choose j
// so the query sits in the central interval where the cubic is accurate.
struct LocalCubic {
  double value, d1, d2;  // p(theta), dp/dr, d2p/dr2 (already divided by h powers)
};

inline LocalCubic local_cubic(double ym1, double y0, double y1, double y2, double theta,
                              double h) {
  // Newton form on nodes -1, 0, 1, 2 (in units of h).
  double c0 = y0;
  double c1 = y1 - y0;
  double c2 = 0.5 * (y1 - 2.0 * y0 + ym1);
  double c3 = (y2 - 3.0 * y1 + 3.0 * y0 - ym1) / 6.0;
  double t = theta;
  double value = c0 + c1 * t + c2 * t * (t - 1.0) + c3 * t * (t - 1.0) * (t + 1.0);
  double d1 = c1 + c2 * (2.0 * t - 1.0) + c3 * (3.0 * t * t - 1.0);
  double d2 = 2.0 * c2 + c3 * 6.0 * t;
  return {value, d1 / h, d2 / (h * h)};
}

}  // namespace qwl
