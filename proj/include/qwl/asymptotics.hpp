// The (s, q, omega) coordinates: asymptotic variables (mu, U, U_q) on a
// q-node x s-time grid, residuals of the reduced flow, scattering-data
// extraction by power-law limit fits, and the two-gauge comparison.
#pragma once

#include <string>
#include <vector>

#include "qwl/fits.hpp"
#include "qwl/geodesic_eikonal.hpp"
#include "qwl/metric.hpp"
#include "qwl/wave_solver.hpp"

namespace qwl {

// s = eps ln t - delta_eff with delta_eff = eps ln T0, so s = 0 at t = T0.
double s_of_t(const RegionSpec& region, double t);
double t_of_s(const RegionSpec& region, double s);

// r with q(t, r) = q on the sheet row nearest t. A monotone inverse table
// seeds a Newton polish against the forward tables, so the round trip
// q_at(t, r) = q closes to integrator precision; the vacuum exterior beyond
// the outermost ray uses r = t + q exactly. CoverageError below the
// innermost ray or off every row.
double invert_q(const OpticalSheet& sheet, double t, double q);

struct AsymptoticProfile {
  Vec3 omega{1.0, 0.0, 0.0};
  double G = 0.0;        // null-form coefficient at omega
  double epsilon = 0.0;  // from the sheet's region
  double delta_eff = 0.0;
  std::vector<double> s;  // ascending diagnostic values
  std::vector<double> t;  // t_k = T0 exp(s_k / eps)
  std::vector<double> q;  // ray labels of the earliest row: exact nodes
  // Tables indexed [s-index][q-index]. mu = q_t - q_r < 0 everywhere,
  // U = r u / eps, U_q = (u + r u_r) / (eps q_r).
  std::vector<std::vector<double>> mu, U, U_q;
  // Residuals of the reduced flow at interior s rows (3-point d_s):
  //   res1 = d_s mu - (G/4) mu^2 U_q,   res2 = d_s U_q + (G/4) mu U_q^2.
  std::vector<double> res_t;
  std::vector<std::vector<double>> res1, res2;
  std::vector<double> res1_sup, res2_sup;
};

// Evaluates the asymptotic variables at every (s, q) node. The sheet must
// have a row at each t_k (CoverageError otherwise) and the field must reach
// t_k; mu >= 0 anywhere is a DegenerateError. epsilon and delta_eff come
// from the sheet's region; G from the field's family at omega.
AsymptoticProfile to_asymptotic(const SolutionField& field, const OpticalSheet& sheet,
                                std::vector<double> s_list,
                                const Vec3& omega = {1.0, 0.0, 0.0});

struct ScatteringData {
  Vec3 omega{1.0, 0.0, 0.0};
  double G = 0.0;
  std::vector<double> q;
  std::vector<double> A, A_err;
  std::vector<double> A1, A1_err;
  std::vector<double> A2, A2_err;
  std::vector<double> gamma_fit;  // convergence exponent of the mu U_q fit

  void validate() const;  // A1 < -1 at every node, sizes consistent
  // Columns: q,A,A_err,A1,A1_err,A2,A2_err,gamma_fit.
  void save_csv(const std::string& path) const;
};

// Per q-node limit fits over the profile's t-sequence:
//   A  = -1/2 lim (mu U_q)
//   A1 = lim exp(+1/2 G A s) mu,   A2 = lim exp(-1/2 G A s) U_q.
// FitError is rethrown with the offending node attached. band > 0 declares
// an absolute resolution width for the sampled columns (the discretization
// drift of the profile, e.g. epsilon * res2_sup at the window end): a column
// that fails the rate fit but varies by no more than the band is recorded as
// converged to its midpoint, with the variation as the error and the gamma
// sentinel 6.
ScatteringData extract_scattering(const AsymptoticProfile& prof, double G, double band = 0.0);

struct GaugeRow {
  double q = 0.0;         // node in gauge 1
  double qbar_inf = 0.0;  // fitted limit of the gauge-2 label along the ray
  double defect = 0.0;    // |A(q) - Abar(qbar_inf)|
};

// Composes the two optical sheets at their shared row times: for each node q
// of gauge 1, qbar(t) = q2(t, r1(t, q)), fitted for its limit, then compared
// through the gauge-2 scattering table. Nodes not covered by both sheets are
// dropped; CoverageError when fewer than four shared times or no node
// survives.
std::vector<GaugeRow> gauge_compare(const OpticalSheet& sheet1, const ScatteringData& d1,
                                    const OpticalSheet& sheet2, const ScatteringData& d2);

}  // namespace qwl
