#include "qwl/reduced_system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qwl/csvio.hpp"
#include "qwl/errors.hpp"
#include "qwl/quad.hpp"
#include "qwl/rk45.hpp"

namespace qwl {

namespace {

constexpr double kExteriorA1 = -2.0;

double grid_spacing(const std::vector<double>& q) {
  if (q.size() < 16) throw DomainError("comparison grid needs >= 16 nodes");
  double h = (q.back() - q.front()) / static_cast<double>(q.size() - 1);
  if (!(h > 0.0)) throw DomainError("comparison grid must increase");
  for (std::size_t i = 0; i + 1 < q.size(); ++i)
    if (std::fabs(q[i + 1] - q[i] - h) > 1e-9 * std::max(1.0, h))
      throw DomainError("comparison grid must be uniform");
  return h;
}

}  // namespace

ReducedSolution ReducedSolution::constant(double A1, double A2, double G, double R) {
  ReducedSolution sol;
  sol.constant_mode_ = true;
  sol.cA1_ = A1;
  sol.cA2_ = A2;
  sol.G_ = G;
  sol.R_ = R;
  return sol;
}

ReducedSolution::ReducedSolution(std::vector<double> q, std::vector<double> A1,
                                 std::vector<double> A2, std::vector<double> A, double G,
                                 double R)
    : G_(G), R_(R) {
  const std::size_t n = q.size();
  if (n < 2 || A1.size() != n || A2.size() != n || A.size() != n)
    throw ConfigError("reduced solution tables must share >= 2 nodes");
  if (!(q.back() >= R))
    throw ConfigError("reduced solution table must cover q up to R");
  for (std::size_t i = 0; i < n; ++i) {
    double defect = std::fabs(A1[i] * A2[i] + 2.0 * A[i]);
    if (defect > 1e-12)
      throw ConfigError("scattering data violates A1*A2 = -2A at a node");
  }
  tA1_ = CubicTable(q, std::move(A1), CubicTable::Slopes::FiniteDifference);
  tA2_ = CubicTable(q, std::move(A2), CubicTable::Slopes::FiniteDifference);
  tA_ = CubicTable(std::move(q), std::move(A), CubicTable::Slopes::FiniteDifference);
}

double ReducedSolution::A1(double q) const {
  if (constant_mode_) return cA1_;
  if (q > tA1_.x_max()) return kExteriorA1;
  return tA1_(q);
}

double ReducedSolution::A2(double q) const {
  if (constant_mode_) return cA2_;
  if (q > tA2_.x_max()) return 0.0;
  return tA2_(q);
}

double ReducedSolution::A(double q) const {
  // Derived from the interpolated (A1, A2) so the product law A1*A2 = -2A
  // holds pointwise between nodes too; the stored A table (validated at
  // construction) is kept for serialization.
  if (constant_mode_) return -0.5 * cA1_ * cA2_;
  return -0.5 * A1(q) * A2(q);
}

std::string ReducedSolution::to_csv() const {
  if (constant_mode_)
    throw IoError("constant-mode reduced solution has no table to serialize");
  std::string body;
  body += "# G=" + fmt17(G_) + "\n";
  body += "# R=" + fmt17(R_) + "\n";
  CsvWriter rows({"q", "A1", "A2", "A"});
  const auto& xs = tA1_.xs();
  for (std::size_t i = 0; i < xs.size(); ++i)
    rows.row({xs[i], tA1_.ys()[i], tA2_.ys()[i], tA_.ys()[i]});
  return body + rows.str();
}

void ReducedSolution::save_csv(const std::string& path) const {
  write_file_bytes(path, to_csv());
}

ReducedSolution ReducedSolution::load_csv(const std::string& path) {
  std::istringstream in(read_file_bytes(path));
  std::string line;
  double G = 0.0, R = 0.0;
  bool got_g = false, got_r = false;
  std::vector<double> q, a1, a2, a;
  while (std::getline(in, line)) {
    if (line.rfind("# G=", 0) == 0) {
      G = std::strtod(line.c_str() + 4, nullptr);
      got_g = true;
      continue;
    }
    if (line.rfind("# R=", 0) == 0) {
      R = std::strtod(line.c_str() + 4, nullptr);
      got_r = true;
      continue;
    }
    if (line.empty() || line.rfind("q,", 0) == 0 || line[0] == '#') continue;
    const char* p = line.c_str();
    char* end = nullptr;
    double vals[4];
    for (int k = 0; k < 4; ++k) {
      vals[k] = std::strtod(p, &end);
      if (end == p) throw IoError("malformed reduced-solution row: " + line);
      p = end;
      if (*p == ',') ++p;
    }
    q.push_back(vals[0]);
    a1.push_back(vals[1]);
    a2.push_back(vals[2]);
    a.push_back(vals[3]);
  }
  if (!got_g || !got_r) throw IoError("reduced-solution CSV missing G/R header");
  return ReducedSolution(std::move(q), std::move(a1), std::move(a2), std::move(a), G, R);
}

ReducedPoint eval_reduced(const ReducedSolution& sol, double s, double q) {
  double e = 0.5 * sol.G() * sol.A(q) * s;
  return {sol.A1(q) * std::exp(-e), sol.A2(q) * std::exp(e)};
}

double eval_U(const ReducedSolution& sol, double s, double q, double quad_tol) {
  if (q >= sol.R()) return 0.0;
  auto integrand = [&](double p) {
    return sol.A2(p) * std::exp(0.5 * sol.G() * sol.A(p) * s);
  };
  return -integrate(integrand, q, sol.R(), quad_tol);
}

ReducedTrajectory integrate_reduced(double A1, double A2, double G, double s_end) {
  ReducedTrajectory traj;
  std::array<double, 2> y{A1, A2};
  Rk45Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-13;
  auto rhs = [G](double, const std::array<double, 2>& v, std::array<double, 2>& d) {
    d[0] = 0.25 * G * v[0] * v[0] * v[1];
    d[1] = -0.25 * G * v[0] * v[1] * v[1];
  };
  rk45_span<2>(rhs, y, 0.0, s_end, opt, [&](double s, const std::array<double, 2>& v) {
    traj.s.push_back(s);
    traj.mu.push_back(v[0]);
    traj.U_q.push_back(v[1]);
  });
  return traj;
}

namespace {

// Periodic central slopes for the Burgers monitor.
std::vector<double> periodic_slopes(const std::vector<double>& v, double h) {
  const std::size_t n = v.size();
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    double vp = v[(i + 1) % n];
    double vm = v[(i + n - 1) % n];
    m[i] = (vp - vm) / (2.0 * h);
  }
  return m;
}

ComparisonRun run_riccati(const std::vector<double>& q, const std::vector<double>& v0,
                          double s_end) {
  ComparisonRun out;
  out.q = q;
  double vmax = *std::max_element(v0.begin(), v0.end());
  double s_cf = (vmax > 0.0) ? 1.0 / vmax : std::numeric_limits<double>::infinity();
  if (std::isfinite(s_cf)) out.s_star = s_cf;
  if (s_end >= s_cf) {
    out.blowup = true;
    out.s_reached = s_cf;
    return out;
  }
  out.U_q.resize(v0.size());
  for (std::size_t i = 0; i < v0.size(); ++i) out.U_q[i] = v0[i] / (1.0 - v0[i] * s_end);
  out.s_reached = s_end;
  return out;
}

// Upwind finite-difference run of 2 d_s V + V d_q V = 0 on a periodic grid,
// watching the steepest negative slope. Pre-catastrophe the minimum slope m
// satisfies 1/|m|(s) = 1/|m0| - s/2 exactly, so s + 2/|m| stays equal to
// the catastrophe time; the estimate is read off at the steepest profile
// the scheme resolves before numerical viscosity saturates the slope.
double burgers_monitor(const std::vector<double>& v0, double h, double s_cf) {
  std::vector<double> v = v0;
  const std::size_t n = v.size();
  double s = 0.0;
  const double horizon = 1.5 * s_cf + 1.0;

  auto min_slope = [&](const std::vector<double>& in) {
    auto slopes = periodic_slopes(in, h);
    return *std::min_element(slopes.begin(), slopes.end());
  };
  const double m0 = min_slope(v);
  // Pre-catastrophe the estimate s + 2/|m| is flat in s; once the scheme's
  // viscosity caps the resolvable slope, the estimate starts drifting along
  // with s. The catastrophe time is the last flat estimate.
  double prev_est = -2.0 / m0, prev_s = 0.0;
  bool steepening = false;

  std::vector<double> vh(n), v2(n);
  auto step = [&](const std::vector<double>& in, std::vector<double>& out, double ds) {
    for (std::size_t i = 0; i < n; ++i) {
      double a = 0.5 * in[i];
      double d = (a > 0.0) ? (in[i] - in[(i + n - 1) % n]) / h
                           : (in[(i + 1) % n] - in[i]) / h;
      out[i] = in[i] - ds * a * d;
    }
  };
  while (s < horizon) {
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::fabs(x));
    double ds = 0.4 * h / std::max(0.5 * vmax, 1e-8);
    // Heun: predictor-corrector around the upwind operator.
    step(v, vh, ds);
    step(vh, v2, ds);
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.5 * (v[i] + v2[i]);
    s += ds;
    double m = min_slope(v);
    if (!std::isfinite(m)) throw StabilityError("burgers monitor lost finiteness");
    if (m < 0.0) {
      double est = s - 2.0 / m;
      if (m <= 8.0 * m0) steepening = true;
      if (steepening && est - prev_est > 0.5 * (s - prev_s)) return prev_est;
      prev_est = est;
      prev_s = s;
    }
  }
  throw StabilityError("burgers slope monitor never detected the catastrophe");
}

ComparisonRun run_burgers(const std::vector<double>& q, const std::vector<double>& v0,
                          double s_end) {
  ComparisonRun out;
  out.q = q;
  const double h = grid_spacing(q);
  auto slopes = periodic_slopes(v0, h);
  double m0 = *std::min_element(slopes.begin(), slopes.end());
  double s_cf = (m0 < 0.0) ? -2.0 / m0 : std::numeric_limits<double>::infinity();
  if (std::isfinite(s_cf)) out.s_star = s_cf;

  if (s_cf <= s_end) {
    double s_obs = burgers_monitor(v0, h, s_cf);
    if (std::fabs(s_obs - s_cf) > 0.05 * s_cf)
      throw StabilityError("burgers slope monitor disagrees with characteristic crossing");
    out.s_star_monitor = s_obs;
    out.blowup = true;
    out.s_reached = s_cf;
    return out;
  }

  // Pre-catastrophe: evolve exactly by characteristics q0 -> q0 + s V0/2 and
  // resample onto the original grid (periodic extension keeps coverage).
  const std::size_t n = q.size();
  const double period = q.back() - q.front() + h;
  std::vector<double> xs, vs;
  xs.reserve(3 * n);
  vs.reserve(3 * n);
  for (int copy = -1; copy <= 1; ++copy)
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(q[i] + copy * period + 0.5 * s_end * v0[i]);
      vs.push_back(v0[i]);
    }
  CubicTable moved(xs, vs, CubicTable::Slopes::FiniteDifference);
  out.U_q.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.U_q[i] = moved(q[i]);
  out.s_reached = s_end;
  return out;
}

ComparisonRun run_geometric(const std::vector<double>& q, const std::vector<double>& v0,
                            double G, double s_end) {
  ComparisonRun out;
  out.q = q;
  const double h = grid_spacing(q);
  const std::size_t n = q.size();

  // Rebuild U from its q-derivative with U(q_max) = 0 (localized data).
  std::vector<double> U(n, 0.0);
  for (std::size_t i = n - 1; i-- > 0;)
    U[i] = U[i + 1] - 0.5 * h * (v0[i] + v0[i + 1]);
  double scale0 = 0.0;
  for (double x : U) scale0 = std::max(scale0, std::fabs(x));

  std::vector<double> w(n), suffix(n);
  auto rhs = [&](const std::vector<double>& u, std::vector<double>& du) {
    for (std::size_t i = 1; i + 1 < n; ++i)
      w[i] = u[i] * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    w[0] = w[n - 1] = 0.0;
    suffix[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;)
      suffix[i] = suffix[i + 1] + 0.5 * h * (w[i] + w[i + 1]);
    for (std::size_t i = 0; i < n; ++i) du[i] = -0.5 * G * suffix[i];
  };

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  double s = 0.0;
  while (s < s_end) {
    double umax = 0.0;
    for (double x : U) umax = std::max(umax, std::fabs(x));
    double ds = std::min(0.02, 0.5 * h / (0.5 * std::fabs(G) * umax + 0.05));
    ds = std::min(ds, s_end - s);
    rhs(U, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = U[i] + 0.5 * ds * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = U[i] + 0.5 * ds * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = U[i] + ds * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      U[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    s += ds;
    for (double x : U)
      if (!std::isfinite(x)) throw StabilityError("comparison PDE lost finiteness");
    double umax2 = 0.0;
    for (double x : U) umax2 = std::max(umax2, std::fabs(x));
    if (umax2 > 100.0 * (scale0 + 1.0))
      throw StabilityError("comparison PDE amplitude escaped");
  }

  out.U_q.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) out.U_q[i] = (U[i + 1] - U[i - 1]) / (2.0 * h);
  out.U_q[0] = (U[1] - U[0]) / h;
  out.U_q[n - 1] = (U[n - 1] - U[n - 2]) / h;
  out.s_reached = s_end;
  return out;
}

}  // namespace

ComparisonRun hormander_step(const std::vector<double>& q, const std::vector<double>& U_q0,
                             double G, ComparisonModel model, double s_end) {
  if (q.size() != U_q0.size()) throw DomainError("profile/grid size mismatch");
  (void)grid_spacing(q);  // validates uniformity up front for every model
  if (!(s_end >= 0.0)) throw DomainError("s_end must be nonnegative");
  switch (model) {
    case ComparisonModel::Riccati:
      return run_riccati(q, U_q0, s_end);
    case ComparisonModel::Burgers:
      return run_burgers(q, U_q0, s_end);
    case ComparisonModel::GeometricQWE:
      return run_geometric(q, U_q0, G, s_end);
  }
  throw DomainError("unknown comparison model");
}

}  // namespace qwl
