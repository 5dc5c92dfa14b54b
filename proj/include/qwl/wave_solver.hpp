// Radial quasilinear wave solver: -u_tt + c(u)^2 (u_rr + 2 u_r / r) = 0 on
// w = r*u, which satisfies -w_tt + c(w/r)^2 w_rr = 0 exactly. Fields expose
// u and its first/second partials at arbitrary slab points; completed fields
// are immutable and safe for concurrent read-only sampling.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qwl/errors.hpp"
#include "qwl/metric.hpp"
#include "qwl/poly.hpp"

namespace qwl {

// Compactly supported even profile shape(xi) * (1-xi)^m with xi = (r/R)^2,
// identically zero for r >= R. Evenness in r makes odd derivatives vanish at
// the origin; m >= 3 keeps the profile C^2 across the support edge.
struct RadialBump {
  Poly shape{1.0};  // polynomial in xi
  int m = 5;

  // shape * (1-xi)^m as a single polynomial in xi. Throws ConfigError if the
  // degree exceeds what exact antiderivatives can hold, or m < 3.
  Poly mollified() const;
};

// Cauchy data (u, u_t)|_{t=0} = (eps*u0, eps*u1), profiles supported in [0,R].
class InitialData {
public:
  InitialData(double epsilon, double R, RadialBump u0, RadialBump u1);

  // eps = 0.02, R = 1, u0 = (1-xi)^5 bump, u1 = 0.
  static InitialData default_pulse(double epsilon = 0.02, double R = 1.0);

  double epsilon() const { return epsilon_; }
  double R() const { return R_; }

  // Profiles without the epsilon factor.
  double u0(double r) const;
  double u0_r(double r) const;
  double u1(double r) const;

  // d'Alembert ingredients: phi(x) = x*u0(|x|) (odd), its derivative, and
  // Psi(x) = int_0^x y*u1(y) dy (even, constant for |x| >= R).
  double phi(double x) const;
  double phi_d(double x) const;
  double Psi(double x) const;

private:
  double epsilon_, R_;
  Poly q0_, q1_;      // mollified profiles in xi
  Poly q0_d_, q1_i_;  // d q0 / d xi and antiderivative of q1 in xi
};

// Exact linear-wave solution for c == 1: r*u(t,r) = (phi(r+t) - phi(t-r))/2
// + (Psi(t+r) - Psi(t-r))/2, data profiles odd-extended through the origin.
double dalembert_w(const InitialData& data, double t, double r);
double dalembert_u(const InitialData& data, double t, double r);  // r=0 safe

struct FieldSample {
  double u, u_t, u_r, u_tt, u_tr, u_rr;
};

class SolutionField {
public:
  virtual ~SolutionField() = default;
  virtual FieldSample sample(double t, double r) const = 0;
  virtual double t_max() const = 0;
  virtual double support_R() const = 0;  // u == 0 for r >= t + support_R
  virtual double epsilon() const = 0;
  virtual const MetricFamily& family() const = 0;
};

// u and spacetime partials at x = (t, x1, x2, x3) via the radial chain rule.
// Requires |x_spatial| bounded away from the axis singularity of the chain
// rule; callers sample along rays with r of order t.
struct FieldSample4 {
  double u;
  Vec4 du;
  Mat4 d2u;
};
FieldSample4 sample4(const SolutionField& f, const Vec4& x);

// sup_r |u(t,.)| recorded as the run progresses (one point per stored slice).
struct DecayPoint {
  double t, sup_u, r_at_sup;
};

struct SolveOptions {
  double cfl = 0.5;  // k = cfl * h / sup c; stability requires cfl <= 0.5
  double store_factor = 1.05;         // geometric slice spacing beyond t = 1
  std::vector<double> store_times;    // extra slice targets (diagnostics)
  bool store_every_step = false;      // short runs only
  // Interior truncation for long runs: the solution is concentrated near the
  // light cone, so the grid follows the band q = r - t in
  // [-(band_q0 + band_recede*t), R + 10h] with a damping layer at the inner
  // edge. The inner boundary recedes slower than every characteristic, and
  // the layer sits where the interior tail is orders below the cone values.
  bool truncate_interior = false;
  double band_q0 = 15.0;
  double band_recede = 0.025;
  int sponge_cells = 80;
};

// Numerically evolved field: slices of w and w_t at geometrically spaced
// times, sampled by cubic interpolation in r composed with cubic Hermite in t
// along lines of constant r - t (the outgoing-wave direction, so coarse late
// slice gaps cost only the slow 1/r modulation). Derivatives are the exact
// partials of that interpolant.
class GridField final : public SolutionField {
public:
  struct Slice {
    double t;
    std::int64_t j0;        // first stored grid index; r = j*h globally
    double q_usable;        // inner r-t limit where the damping layer ends
    std::vector<double> w;  // r*u at r = (j0+i)*h
    std::vector<double> wt;
  };

  FieldSample sample(double t, double r) const override;
  double t_max() const override { return t_max_; }
  double support_R() const override { return R_; }
  double epsilon() const override { return epsilon_; }
  const MetricFamily& family() const override { return fam_; }

  double h() const { return h_; }
  double k() const { return k_; }
  std::size_t n_slices() const { return slices_.size(); }
  const Slice& slice(std::size_t i) const { return slices_[i]; }
  const std::vector<DecayPoint>& decay_trace() const { return decay_; }

  // Binary snapshot: header {magic "WNSF", version u32, h f64, k f64,
  // n_slices u32}, then per slice {t f64, n_points u32, u f64[n_points]},
  // little-endian, u tabulated from r = 0 (truncated interiors padded with
  // zeros). CSV export has columns t,r,u with optional slice/point strides.
  void save_wnsf(const std::string& path) const;
  void save_csv(const std::string& path, std::size_t slice_stride = 1,
                std::size_t point_stride = 1) const;

private:
  friend GridField solve(const MetricFamily&, const InitialData&, double,
                         double, const SolveOptions&);
  GridField() = default;
  MetricFamily fam_ = MetricFamily::flat();
  double epsilon_ = 0.0, R_ = 1.0, h_ = 0.01, k_ = 0.0, t_max_ = 0.0;
  std::vector<Slice> slices_;
  std::vector<DecayPoint> decay_;
};

GridField solve(const MetricFamily& fam, const InitialData& data, double T_max,
                double h, const SolveOptions& opt = {});

// Reloaded snapshot (value data only; GridField sampling needs the w_t slices
// which the interchange format does not carry).
struct SnapshotSlice {
  double t;
  std::vector<double> u;
};
struct Snapshot {
  double h, k;
  std::vector<SnapshotSlice> slices;
};
Snapshot load_wnsf(const std::string& path);

// Closed-form field u = eps * chi(r - t) / r with chi a RadialBump in the
// cone offset; not a PDE solution. Exact derivatives, no interpolation.
class ConeBumpField final : public SolutionField {
public:
  ConeBumpField(double epsilon, double R, RadialBump chi, double t_max,
                MetricFamily fam = MetricFamily::flat());

  FieldSample sample(double t, double r) const override;
  double t_max() const override { return t_max_; }
  double support_R() const override { return R_; }
  double epsilon() const override { return epsilon_; }
  const MetricFamily& family() const override { return fam_; }

private:
  double epsilon_, R_, t_max_;
  Poly q_, qd_, qdd_;  // mollified chi and xi-derivatives
  MetricFamily fam_;
};

ConeBumpField manufactured_field(const RadialBump& chi, double epsilon,
                                 double R, double t_max);

}  // namespace qwl
