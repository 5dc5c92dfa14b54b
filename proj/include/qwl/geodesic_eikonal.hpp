// Bicharacteristic tracing and the optical function q.
//
// Rays are seeded on the cone H = {r = kappa*(t - T0) + T0 + 2R}, launched
// by solving the eikonal constraint for the initial covector, and integrated
// forward with the shared RK45 driver. A family of rays tabulates q(t, r)
// (each ray carries its constant label z = r - t at the seed) together with
// the derived quantities q_t, q_r, mu = q_t - q_r, nu = q_t + q_r.
#pragma once

#include <string>
#include <vector>

#include "qwl/interp.hpp"
#include "qwl/metric.hpp"
#include "qwl/wave_solver.hpp"

namespace qwl {

// Exterior region Omega = {t > T0, r > kappa*(t - T0) + T0 + 2R} and its
// mantle H. T0 is set directly rather than through exp(delta/epsilon); the
// effective delta for a run is delta_eff() = epsilon * ln T0.
struct RegionSpec {
  double kappa = 0.5;
  double T0 = 10.0;
  double R = 1.0;
  double epsilon = 0.02;

  void validate() const;  // ConfigError unless 0 < kappa < 1 and T0 >= 1

  double delta_eff() const { return epsilon * std::log(T0); }
  double H_r(double t) const { return kappa * (t - T0) + T0 + 2.0 * R; }
  // Time at which the ray labelled z = r - t sits on H.
  double seed_time(double z) const { return T0 + (2.0 * R - z) / (1.0 - kappa); }
  Vec4 seed_point(double z, const Vec3& omega) const;
  bool in_omega(double t, double r) const { return t > T0 && r > H_r(t); }
};

// Geodesic flow in the inverse-metric Hamiltonian form,
//   xdot^a = 2 g^{ab}(u) p_b,   pdot_a = -(d_a u) dg^{mn}/du p_m p_n,
// evaluated from one field sample. Shared with the frame-transport module,
// which augments the same state with frame vectors.
struct GeodesicRhs {
  Vec4 xdot;
  Vec4 pdot;
};
GeodesicRhs geodesic_rhs(const MetricFamily& fam, const FieldSample4& loc, const Vec4& p);

// g^{ab}(u) p_a p_b; zero along exact bicharacteristics.
double null_residual(const MetricFamily& fam, double u, const Vec4& p);

// Result of solving the eikonal constraint at a seed on H.
struct HInit {
  double z = 0.0;  // r - t at the seed; the ray's q-label for all time
  Vec4 p{};        // dq at the seed
};

// The covector must satisfy both the eikonal equation g^{ab}p_a p_b = 0 and
// the tangential constraint X_i q = (1 - 1/kappa) omega_i along H, which
// reduce to a quadratic in p_0. The branch continuously connected to the
// flat-space value p_0 = -1 is physical; the other root is discarded.
// RootError if the discriminant is negative or the roots have merged toward
// the spurious branch (|u| too large for the seed to make sense).
HInit init_on_H(const MetricFamily& fam, const SolutionField& field, const RegionSpec& region,
                const Vec4& seed);

struct BicharSample {
  double sigma;
  Vec4 x;
  Vec4 p;
  double null_residual;
};

struct Bicharacteristic {
  double z = 0.0;
  Vec3 omega{1.0, 0.0, 0.0};
  std::vector<BicharSample> samples;   // every accepted integrator step
  std::vector<BicharSample> at_times;  // landed exactly on the requested times
  std::vector<double> land_times;      // the subset of requested times past the seed

  double seed_t() const { return samples.front().x[0]; }
  // Columns: sigma,t,x1,x2,x3,p0,p1,p2,p3,null_residual.
  void save_csv(const std::string& path) const;
};

struct TraceOptions {
  double rk_tol = 1e-10;
  double null_tol = 1e-8;          // per-sample bound; growth past it rejects the step
  double h_max = 25.0;             // in sigma; dt along the ray is about twice this
  std::vector<double> land_times;  // times to land on exactly (diagnostic rows)
};

// Integrate the ray from a seed on H until x^0 = t_end. Samples the field
// at min(x^0, t_end) so that trial stages probing past the landing time do
// not fall off the stored slab. StabilityError on step-size underflow (the
// null-residual veto forces halving until the step passes or h collapses).
Bicharacteristic trace(const MetricFamily& fam, const SolutionField& field,
                       const RegionSpec& region, const Vec4& seed, double t_end,
                       const TraceOptions& opt = {});

// Evenly spaced seed labels covering [z_min, z_max] with gap <= dq.
std::vector<double> seed_grid(double z_min, double z_max, double dq);

// q and companions tabulated on rows of constant t. Queries interpolate z
// monotonically in r between bracketing rays; beyond the outermost ray
// (r - t >= outermost z) the optical function is exactly r - t.
class OpticalSheet {
 public:
  struct Row {
    double t = 0.0;
    std::vector<double> r;  // ascending; one entry per ray seeded by time t
    std::vector<double> q;
    std::vector<double> q_t;
    std::vector<double> q_r;
    std::vector<double> mu;
    std::vector<double> nu;
  };

  OpticalSheet(RegionSpec region, std::vector<Row> rows);

  const RegionSpec& region() const { return region_; }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row_at(double t) const;  // CoverageError if no row at that time

  double q_at(double t, double r) const;
  double qt_at(double t, double r) const;
  double qr_at(double t, double r) const;
  double mu_at(double t, double r) const;
  double nu_at(double t, double r) const;

  // Columns: t,r,q,q_t,q_r,mu,nu (one line per ray per row).
  void save_csv(const std::string& path) const;

 private:
  struct RowTables {
    double z_max = 0.0;
    CubicTable q;  // monotone in r
    CubicTable q_t;
    CubicTable q_r;
    CubicTable mu;
    CubicTable nu;
  };
  const RowTables& tables_at(double t) const;
  double field_at(double t, double r, int which) const;

  RegionSpec region_;
  std::vector<Row> rows_;
  std::vector<RowTables> tables_;
};

// Trace one ray per seed label (all along the same omega), landing on every
// diagnostic time. Rays are independent; order of work does not matter.
std::vector<Bicharacteristic> trace_family(const MetricFamily& fam, const SolutionField& field,
                                           const RegionSpec& region,
                                           const std::vector<double>& seeds,
                                           const std::vector<double>& diag_times, double t_end,
                                           const TraceOptions& opt = {},
                                           const Vec3& omega = {1.0, 0.0, 0.0});

// Assemble the sheet from traced rays. Validates the seed gaps against
// dq_target, and at every diagnostic time checks that the rays' r-order
// matches seed order (CrossingError otherwise; this is the numerical shadow
// of positive null mean curvature) and that q_r > 0 > q_t (DegenerateError).
OpticalSheet build_sheet(const RegionSpec& region, const std::vector<Bicharacteristic>& curves,
                         double dq_target = 0.05);

// Convenience wrapper: seed, trace, and assemble in one call.
OpticalSheet build_sheet(const MetricFamily& fam, const SolutionField& field,
                         const RegionSpec& region, const std::vector<double>& seeds,
                         const std::vector<double>& diag_times, double dq_target = 0.05,
                         const TraceOptions& opt = {});

}  // namespace qwl
