// Metric families g^{ab}(u): evaluation, inversion, u-derivatives,
// Christoffel symbols, and the asymptotic null form G(omega).
#pragma once

#include <array>
#include <string>
#include <vector>

#include "qwl/poly.hpp"

namespace qwl {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;
// chris[alpha][mu][nu], symmetric in (mu, nu).
using Christoffel = std::array<Mat4, 4>;

// Unit spatial direction with its associated null covector (-1, omega).
struct Direction {
  Vec3 omega;

  explicit Direction(const Vec3& w);
  Vec4 omega_hat() const { return {-1.0, omega[0], omega[1], omega[2]}; }
};

// Polynomial-in-u family of inverse metrics with g^{ab}(0) = diag(-1,1,1,1)
// and the normalization g^{00} == -1 throughout.
class MetricFamily {
public:
  enum class Kind { Isotropic, GeneralPolynomial };

  // g^{00} = -1, g^{0i} = 0, g^{ij} = c(u)^2 delta_ij; requires c(0) = 1.
  static MetricFamily isotropic(const Poly& c, double u_validity = 0.2);
  static MetricFamily flat(double u_validity = 0.2);
  // g^{ab}(u) = m^{ab} + sum_k u^k (g_terms[k-1])^{ab}; each term must be
  // symmetric with zero 00-component.
  static MetricFamily general(const std::vector<Mat4>& g_terms, double u_validity = 0.2);
  // "flat" | "isotropic:c=<polynomial in u>", e.g. "isotropic:c=1+u+0.5u^2".
  static MetricFamily from_preset(const std::string& name, double u_validity = 0.2);

  Kind kind() const { return kind_; }
  double u_validity() const { return u_validity_; }
  bool is_flat() const;
  // Sound speed polynomial c(u); only meaningful for Isotropic families.
  const Poly& isotropic_c() const;

  // d/du g^{ab} at u = 0 (the linearized coefficients entering G).
  Mat4 g0() const;

  const Poly& inv_component(int a, int b) const { return inv_[a][b]; }
  const Poly& inv_d1_component(int a, int b) const { return inv_d1_[a][b]; }

private:
  MetricFamily() = default;
  void finalize();  // derive inv_d1_/inv_d2_ and sanity-scan the family

  Kind kind_ = Kind::Isotropic;
  double u_validity_ = 0.2;
  Poly c_;                // Isotropic only
  Poly inv_[4][4];        // g^{ab}(u)
  Poly inv_d1_[4][4];     // d/du g^{ab}
  Poly inv_d2_[4][4];     // d2/du2 g^{ab}

  friend Mat4 eval_inverse_metric(const MetricFamily&, double);
  friend Mat4 inverse_metric_d1(const MetricFamily&, double);
  friend Mat4 inverse_metric_d2(const MetricFamily&, double);
};

Mat4 eval_inverse_metric(const MetricFamily& fam, double u);
Mat4 eval_lower_metric(const MetricFamily& fam, double u);

// Exact u-derivatives of the raised and lowered metrics.
Mat4 inverse_metric_d1(const MetricFamily& fam, double u);
Mat4 inverse_metric_d2(const MetricFamily& fam, double u);
Mat4 lower_metric_d1(const MetricFamily& fam, double u);
Mat4 lower_metric_d2(const MetricFamily& fam, double u);

// Levi-Civita Christoffel symbols for the composed field u(t,x):
// Gamma^a_{mn} = 1/2 g^{ab} (d_m g_{nb} + d_n g_{mb} - d_b g_{mn}),
// where d_m g_{nb} = (d/du g_{nb}) * du[m].
Christoffel christoffel(const MetricFamily& fam, double u, const Vec4& du);

// G(omega) = g0^{ab} omega_hat_a omega_hat_b; the coefficient of the
// asymptotic self-interaction. The raw-matrix overload contracts an
// arbitrary symmetric g0 (families constructed here always have g0^{00}=0).
double null_form_G(const Mat4& g0, const Direction& dir);
double null_form_G(const MetricFamily& fam, const Direction& dir);

}  // namespace qwl
