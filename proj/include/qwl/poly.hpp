// Small dense polynomial in one variable, used for metric coefficients c(u),
// g^{ab}(u) components, and bump initial-data profiles. Degree is capped so
// u-derivatives are exact.
#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>

namespace qwl {

inline constexpr int kMaxPolyDegree = 8;

class Poly {
public:
  Poly() = default;
  Poly(std::initializer_list<double> coeffs) {
    int i = 0;
    for (double c : coeffs) {
      if (i <= kMaxPolyDegree) coef_[i] = c;
      ++i;
    }
    degree_ = i - 1;
    if (degree_ > kMaxPolyDegree) degree_ = kMaxPolyDegree;
    if (degree_ < 0) degree_ = 0;
  }

  static Poly constant(double c) { return Poly{c}; }

  double operator()(double u) const {
    double acc = 0.0;
    for (int i = degree_; i >= 0; --i) acc = acc * u + coef_[i];
    return acc;
  }

  // d/du, exact.
  Poly derivative() const {
    Poly d;
    if (degree_ == 0) {
      d.coef_[0] = 0.0;
      d.degree_ = 0;
      return d;
    }
    for (int i = 1; i <= degree_; ++i) d.coef_[i - 1] = coef_[i] * i;
    d.degree_ = degree_ - 1;
    return d;
  }

  // Antiderivative with zero constant term, exact.
  Poly antiderivative() const {
    Poly a;
    a.degree_ = degree_ + 1;
    if (a.degree_ > kMaxPolyDegree) a.degree_ = kMaxPolyDegree;
    a.coef_[0] = 0.0;
    for (int i = 0; i <= degree_ && i + 1 <= kMaxPolyDegree; ++i)
      a.coef_[i + 1] = coef_[i] / (i + 1);
    return a;
  }

  Poly operator*(const Poly& o) const {
    Poly p;
    p.degree_ = degree_ + o.degree_;
    if (p.degree_ > kMaxPolyDegree) p.degree_ = kMaxPolyDegree;
    for (int i = 0; i <= degree_; ++i)
      for (int j = 0; j <= o.degree_ && i + j <= kMaxPolyDegree; ++j)
        p.coef_[i + j] += coef_[i] * o.coef_[j];
    return p;
  }

  Poly operator+(const Poly& o) const {
    Poly p;
    p.degree_ = degree_ > o.degree_ ? degree_ : o.degree_;
    for (int i = 0; i <= p.degree_; ++i) p.coef_[i] = coef_[i] + o.coef_[i];
    return p;
  }

  int degree() const { return degree_; }
  double coef(int i) const { return (i >= 0 && i <= kMaxPolyDegree) ? coef_[i] : 0.0; }
  void set_coef(int i, double v) {
    if (i < 0 || i > kMaxPolyDegree) return;
    coef_[i] = v;
    if (i > degree_) degree_ = i;
  }

  bool is_zero() const {
    for (int i = 0; i <= degree_; ++i)
      if (coef_[i] != 0.0) return false;
    return true;
  }

private:
  std::array<double, kMaxPolyDegree + 1> coef_{};
  int degree_ = 0;
};

}  // namespace qwl
