// The asymptotic reduced system: closed-form solutions from scattering data
// (A1, A2, A, G), its numerical integration cross-check, and the comparison
// models (flat-gauge PDE, Burgers, Riccati) with blowup detection.
#pragma once

#include <limits>
#include <string>
#include <vector>

#include "qwl/interp.hpp"

namespace qwl {

struct ReducedPoint {
  double mu;
  double U_q;
};

// Data (A1, A2, A)(q) for one direction, together with G and the data
// radius R. Exact solution evaluators:
//   mu(s,q)  = A1(q) exp(-1/2 G A(q) s)
//   U_q(s,q) = A2(q) exp(+1/2 G A(q) s)
class ReducedSolution {
public:
  // q-independent data on (-inf, R]; A = -A1*A2/2.
  static ReducedSolution constant(double A1, double A2, double G, double R);
  // Tabulated data on [q.front(), q.back()] with q.back() >= R; beyond the
  // table the data is exactly (-2, 0, 0). A1*A2 = -2A is enforced at every
  // node within 1e-12.
  ReducedSolution(std::vector<double> q, std::vector<double> A1, std::vector<double> A2,
                  std::vector<double> A, double G, double R);

  double G() const { return G_; }
  double R() const { return R_; }
  double q_min() const {
    return constant_mode_ ? -std::numeric_limits<double>::infinity() : tA1_.x_min();
  }
  double A1(double q) const;
  double A2(double q) const;
  double A(double q) const;

  std::string to_csv() const;
  void save_csv(const std::string& path) const;
  static ReducedSolution load_csv(const std::string& path);

private:
  ReducedSolution() = default;

  bool constant_mode_ = false;
  double cA1_ = -2.0, cA2_ = 0.0;
  CubicTable tA1_, tA2_, tA_;
  double G_ = 0.0, R_ = 1.0;
};

ReducedPoint eval_reduced(const ReducedSolution& sol, double s, double q);

// U(s,q) = -int_q^R A2(p) exp(1/2 G A(p) s) dp, zero for q >= R.
double eval_U(const ReducedSolution& sol, double s, double q, double quad_tol = 1e-10);

struct ReducedTrajectory {
  std::vector<double> s, mu, U_q;
};

// RK4(5) integration of d_s mu = 1/4 G mu^2 U_q, d_s U_q = -1/4 G mu U_q^2
// from (A1, A2) at s = 0.
ReducedTrajectory integrate_reduced(double A1, double A2, double G, double s_end);

enum class ComparisonModel { GeometricQWE, Burgers, Riccati };

// Outcome of a comparison-model run. Blowup is an expected result for the
// Burgers/Riccati models, so it is reported, not thrown.
struct ComparisonRun {
  bool blowup = false;
  // Catastrophe-time estimate (closed form where one exists); NaN if none.
  double s_star = std::numeric_limits<double>::quiet_NaN();
  // Independent estimate from slope monitoring in the finite-difference run
  // (Burgers only); must agree with s_star within 5%.
  double s_star_monitor = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> q;
  std::vector<double> U_q;  // evolved profile; empty when blowup preempts s_end
  double s_reached = 0.0;
};

// Evolve a U_q profile on a uniform q-grid under the chosen model:
//   GeometricQWE: 2 d_s d_q U = G U d_q^2 U (global existence expected)
//   Burgers:      2 d_s U_q + U_q d_q U_q = 0 (catastrophe at -2/min d_qU_q)
//   Riccati:      d_s U_q = U_q^2 pointwise (catastrophe at 1/max U_q)
ComparisonRun hormander_step(const std::vector<double>& q, const std::vector<double>& U_q0,
                             double G, ComparisonModel model, double s_end);

}  // namespace qwl
