#include "qwl/geodesic_eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qwl/csvio.hpp"
#include "qwl/errors.hpp"
#include "qwl/rk45.hpp"

namespace qwl {

namespace {

double spatial_norm(const Vec4& x) {
  return std::sqrt(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
}

double near_tol(double t) { return 1e-9 * std::max(1.0, std::fabs(t)); }

}  // namespace

void RegionSpec::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("RegionSpec: kappa must lie in (0, 1)");
  if (!(T0 >= 1.0)) throw ConfigError("RegionSpec: T0 must be >= 1");
  if (!(R > 0.0)) throw ConfigError("RegionSpec: R must be positive");
  if (!(epsilon >= 0.0)) throw ConfigError("RegionSpec: epsilon must be nonnegative");
}

Vec4 RegionSpec::seed_point(double z, const Vec3& omega) const {
  double no = std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
  if (!(no > 0.0)) throw ConfigError("RegionSpec: zero direction");
  double t = seed_time(z);
  double r = t + z;
  return {t, r * omega[0] / no, r * omega[1] / no, r * omega[2] / no};
}

GeodesicRhs geodesic_rhs(const MetricFamily& fam, const FieldSample4& loc, const Vec4& p) {
  const Mat4 inv = eval_inverse_metric(fam, loc.u);
  const Mat4 d1 = inverse_metric_d1(fam, loc.u);
  GeodesicRhs out;
  double quad = 0.0;
  for (int a = 0; a < 4; ++a) {
    double s = 0.0;
    for (int b = 0; b < 4; ++b) {
      s += inv[a][b] * p[b];
      quad += d1[a][b] * p[a] * p[b];
    }
    out.xdot[a] = 2.0 * s;
  }
  for (int a = 0; a < 4; ++a) out.pdot[a] = -loc.du[a] * quad;
  return out;
}

double null_residual(const MetricFamily& fam, double u, const Vec4& p) {
  const Mat4 inv = eval_inverse_metric(fam, u);
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) s += inv[a][b] * p[a] * p[b];
  return s;
}

HInit init_on_H(const MetricFamily& fam, const SolutionField& field, const RegionSpec& region,
                const Vec4& seed) {
  region.validate();
  const double t0 = seed[0];
  const double r0 = spatial_norm(seed);
  if (!(r0 > 0.0)) throw ConfigError("init_on_H: seed on the spatial axis");
  if (std::fabs(r0 - region.H_r(t0)) > near_tol(r0))
    throw ConfigError("init_on_H: seed does not lie on H");
  const Vec3 omega{seed[1] / r0, seed[2] / r0, seed[3] / r0};

  const double u = field.sample(t0, r0).u;
  const Mat4 inv = eval_inverse_metric(fam, u);
  double S = 0.0, g0w = 0.0;
  for (int i = 0; i < 3; ++i) {
    g0w += inv[0][i + 1] * omega[i];
    for (int j = 0; j < 3; ++j) S += inv[i + 1][j + 1] * omega[i] * omega[j];
  }
  const double g00 = inv[0][0];

  // q is constant along H's generators, so the tangential derivatives
  // X_i = d_i + (1/kappa) omega_i d_t give X_i q = (1 - 1/kappa) omega_i.
  // With q_i = lam * omega_i, lam = alpha + beta q_t, the eikonal equation
  // becomes a quadratic in q_t.
  const double alpha = 1.0 - 1.0 / region.kappa;
  const double beta = -1.0 / region.kappa;
  const double a = g00 + 2.0 * g0w * beta + S * beta * beta;
  const double b = 2.0 * g0w * alpha + 2.0 * S * alpha * beta;
  const double c = S * alpha * alpha;

  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) throw RootError("init_on_H: eikonal quadratic has no real root");
  const double sq = std::sqrt(disc);
  const double qf = -0.5 * (b + std::copysign(sq, b));
  if (qf == 0.0 || a == 0.0) throw RootError("init_on_H: eikonal quadratic degenerated");
  const double r1 = qf / a;
  const double r2 = c / qf;
  const double q_t = (std::fabs(r1 + 1.0) <= std::fabs(r2 + 1.0)) ? r1 : r2;
  if (std::fabs(q_t + 1.0) > 0.45)
    throw RootError("init_on_H: both roots far from -1 (field too large at the seed)");

  const double lam = alpha + beta * q_t;
  HInit out;
  out.z = r0 - t0;
  out.p = {q_t, lam * omega[0], lam * omega[1], lam * omega[2]};

  const double scale =
      std::max(1.0, std::fabs(g00) * q_t * q_t + 2.0 * std::fabs(g0w * q_t * lam) +
                        std::fabs(S) * lam * lam);
  if (std::fabs(null_residual(fam, u, out.p)) > 1e-12 * scale)
    throw RootError("init_on_H: selected root fails the eikonal equation");
  return out;
}

void Bicharacteristic::save_csv(const std::string& path) const {
  CsvWriter w({"sigma", "t", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "null_residual"});
  for (const auto& s : samples)
    w.row({s.sigma, s.x[0], s.x[1], s.x[2], s.x[3], s.p[0], s.p[1], s.p[2], s.p[3],
           s.null_residual});
  w.save(path);
}

Bicharacteristic trace(const MetricFamily& fam, const SolutionField& field,
                       const RegionSpec& region, const Vec4& seed, double t_end,
                       const TraceOptions& opt) {
  const double t0 = seed[0];
  if (!(t_end > t0)) throw ConfigError("trace: t_end must exceed the seed time");
  const HInit init = init_on_H(fam, field, region, seed);

  Bicharacteristic curve;
  curve.z = init.z;
  const double r0 = spatial_norm(seed);
  curve.omega = {seed[1] / r0, seed[2] / r0, seed[3] / r0};

  using State = std::array<double, 8>;
  State y{seed[0], seed[1], seed[2], seed[3], init.p[0], init.p[1], init.p[2], init.p[3]};

  // Trial stages may probe past the landing time; freeze the field there so
  // they cannot fall off the stored slab. Accepted states never pass t_end.
  auto res_at = [&](const State& s) {
    double t = std::min(s[0], t_end);
    double r = std::sqrt(s[1] * s[1] + s[2] * s[2] + s[3] * s[3]);
    Vec4 p{s[4], s[5], s[6], s[7]};
    return null_residual(fam, field.sample(t, r).u, p);
  };
  auto rhs = [&](double, const State& s, State& ds) {
    Vec4 x{std::min(s[0], t_end), s[1], s[2], s[3]};
    Vec4 p{s[4], s[5], s[6], s[7]};
    FieldSample4 loc = sample4(field, x);
    GeodesicRhs g = geodesic_rhs(fam, loc, p);
    for (int i = 0; i < 4; ++i) {
      ds[i] = g.xdot[i];
      ds[i + 4] = g.pdot[i];
    }
  };

  double prev_res = std::fabs(res_at(y));
  double sigma_acc = 0.0;
  auto accept = [&](double s_new, const State& s) {
    // Interpolation seams of a tabulated field give the residual small jumps
    // at fixed sigma; halving cannot cure those, so stop vetoing once the
    // step is far below any feature scale and let the final check decide.
    if (s_new - sigma_acc <= 1e-7) return true;
    return std::fabs(res_at(s)) <= std::max(0.5 * opt.null_tol, 1.5 * prev_res + 1e-13);
  };
  auto obs = [&](double sigma, const State& s) {
    if (!curve.samples.empty() && sigma == curve.samples.back().sigma) return;
    sigma_acc = sigma;
    BicharSample smp;
    smp.sigma = sigma;
    smp.x = {s[0], s[1], s[2], s[3]};
    smp.p = {s[4], s[5], s[6], s[7]};
    smp.null_residual = res_at(s);
    prev_res = std::fabs(smp.null_residual);
    curve.samples.push_back(smp);
  };

  std::vector<double> lands = opt.land_times;
  std::sort(lands.begin(), lands.end());
  lands.erase(std::unique(lands.begin(), lands.end()), lands.end());

  Rk45Options rko;
  rko.abs_tol = rko.rel_tol = opt.rk_tol;
  rko.h_max = opt.h_max;

  auto comp = [](const State& s) { return s[0]; };
  double sigma = 0.0;
  for (double tk : lands) {
    if (tk < t0 - near_tol(tk) || tk > t_end + near_tol(tk)) continue;
    sigma = rk45_to_target<8>(rhs, y, sigma, comp, tk, rko, obs, accept);
    curve.land_times.push_back(tk);
    curve.at_times.push_back(curve.samples.back());
  }
  if (y[0] < t_end - near_tol(t_end))
    rk45_to_target<8>(rhs, y, sigma, comp, t_end, rko, obs, accept);

  for (std::size_t i = 0; i < curve.samples.size(); ++i) {
    const auto& s = curve.samples[i];
    if (i > 0 && !(s.x[0] > curve.samples[i - 1].x[0]))
      throw StabilityError("trace: x^0 not strictly increasing");
    if (std::fabs(s.null_residual) > opt.null_tol)
      throw StabilityError("trace: null residual exceeded tolerance");
  }
  return curve;
}

std::vector<double> seed_grid(double z_min, double z_max, double dq) {
  if (!(z_max > z_min)) throw ConfigError("seed_grid: empty range");
  if (!(dq > 0.0)) throw ConfigError("seed_grid: dq must be positive");
  int n = std::max(1, static_cast<int>(std::ceil((z_max - z_min) / dq - 1e-9)));
  std::vector<double> z(n + 1);
  for (int i = 0; i <= n; ++i) z[i] = z_min + (z_max - z_min) * i / n;
  z.back() = z_max;
  return z;
}

OpticalSheet::OpticalSheet(RegionSpec region, std::vector<Row> rows)
    : region_(std::move(region)), rows_(std::move(rows)) {
  region_.validate();
  if (rows_.empty()) throw ConfigError("OpticalSheet: no rows");
  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t k = 0; k + 1 < rows_.size(); ++k)
    if (std::fabs(rows_[k + 1].t - rows_[k].t) <= near_tol(rows_[k].t))
      throw ConfigError("OpticalSheet: duplicate row time");

  tables_.reserve(rows_.size());
  for (const auto& row : rows_) {
    const std::size_t n = row.r.size();
    if (n < 2 || row.q.size() != n || row.q_t.size() != n || row.q_r.size() != n ||
        row.mu.size() != n || row.nu.size() != n)
      throw ConfigError("OpticalSheet: malformed row");
    for (std::size_t i = 0; i < n; ++i) {
      if (i && !(row.r[i] > row.r[i - 1])) throw ConfigError("OpticalSheet: r not increasing");
      if (i && !(row.q[i] > row.q[i - 1]))
        throw DegenerateError("OpticalSheet: q not increasing in r");
      if (!(row.q_r[i] > 0.0) || !(row.q_t[i] < 0.0))
        throw DegenerateError("OpticalSheet: q_r <= 0 or q_t >= 0");
    }
    RowTables tb;
    tb.z_max = row.q.back();
    tb.q = CubicTable(row.r, row.q, CubicTable::Slopes::Monotone);
    tb.q_t = CubicTable(row.r, row.q_t, CubicTable::Slopes::FiniteDifference);
    tb.q_r = CubicTable(row.r, row.q_r, CubicTable::Slopes::FiniteDifference);
    tb.mu = CubicTable(row.r, row.mu, CubicTable::Slopes::FiniteDifference);
    tb.nu = CubicTable(row.r, row.nu, CubicTable::Slopes::FiniteDifference);
    tables_.push_back(std::move(tb));
  }
}

const OpticalSheet::Row& OpticalSheet::row_at(double t) const {
  for (const auto& row : rows_)
    if (std::fabs(row.t - t) <= near_tol(t)) return row;
  throw CoverageError("OpticalSheet: no row at requested time");
}

const OpticalSheet::RowTables& OpticalSheet::tables_at(double t) const {
  for (std::size_t k = 0; k < rows_.size(); ++k)
    if (std::fabs(rows_[k].t - t) <= near_tol(t)) return tables_[k];
  throw CoverageError("OpticalSheet: no row at requested time");
}

double OpticalSheet::field_at(double t, double r, int which) const {
  const RowTables& tb = tables_at(t);
  const Row& row = row_at(t);
  if (r > row.r.back() + near_tol(r) || r - t >= 2.0 * region_.R - 1e-12) {
    // Vacuum exterior: the optical function is exactly r - t there.
    if (row.r.back() - t < 2.0 * region_.R - 1e-6)
      throw CoverageError("OpticalSheet: query beyond the outermost ray");
    switch (which) {
      case 0: return r - t;
      case 1: return -1.0;
      case 2: return 1.0;
      case 3: return -2.0;
      default: return 0.0;
    }
  }
  if (r < row.r.front() - near_tol(r))
    throw CoverageError("OpticalSheet: query below the innermost ray");
  double rc = std::min(std::max(r, row.r.front()), row.r.back());
  switch (which) {
    case 0: return tb.q(rc);
    case 1: return tb.q_t(rc);
    case 2: return tb.q_r(rc);
    case 3: return tb.mu(rc);
    default: return tb.nu(rc);
  }
}

double OpticalSheet::q_at(double t, double r) const { return field_at(t, r, 0); }
double OpticalSheet::qt_at(double t, double r) const { return field_at(t, r, 1); }
double OpticalSheet::qr_at(double t, double r) const { return field_at(t, r, 2); }
double OpticalSheet::mu_at(double t, double r) const { return field_at(t, r, 3); }
double OpticalSheet::nu_at(double t, double r) const { return field_at(t, r, 4); }

void OpticalSheet::save_csv(const std::string& path) const {
  CsvWriter w({"t", "r", "q", "q_t", "q_r", "mu", "nu"});
  for (const auto& row : rows_)
    for (std::size_t i = 0; i < row.r.size(); ++i)
      w.row({row.t, row.r[i], row.q[i], row.q_t[i], row.q_r[i], row.mu[i], row.nu[i]});
  w.save(path);
}

std::vector<Bicharacteristic> trace_family(const MetricFamily& fam, const SolutionField& field,
                                           const RegionSpec& region,
                                           const std::vector<double>& seeds,
                                           const std::vector<double>& diag_times, double t_end,
                                           const TraceOptions& opt, const Vec3& omega) {
  TraceOptions o = opt;
  o.land_times = diag_times;
  std::vector<Bicharacteristic> curves;
  curves.reserve(seeds.size());
  for (double z : seeds)
    curves.push_back(trace(fam, field, region, region.seed_point(z, omega), t_end, o));
  return curves;
}

OpticalSheet build_sheet(const RegionSpec& region, const std::vector<Bicharacteristic>& curves,
                         double dq_target) {
  if (curves.empty()) throw ConfigError("build_sheet: no curves");
  std::vector<std::size_t> order(curves.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return curves[a].z < curves[b].z; });
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    double gap = curves[order[k + 1]].z - curves[order[k]].z;
    if (gap > dq_target + 1e-12) throw ConfigError("build_sheet: seed gap exceeds target");
    if (!(gap > 0.0)) throw ConfigError("build_sheet: duplicate seed label");
  }

  std::vector<double> times;
  for (const auto& c : curves)
    for (double t : c.land_times) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<OpticalSheet::Row> rows;
  for (double tk : times) {
    OpticalSheet::Row row;
    row.t = tk;
    double prev_r = -1.0, prev_z = 0.0;
    for (std::size_t k : order) {
      const auto& c = curves[k];
      std::size_t j = 0;
      for (; j < c.land_times.size(); ++j)
        if (c.land_times[j] == tk) break;
      if (j == c.land_times.size()) continue;
      const BicharSample& s = c.at_times[j];
      double r = spatial_norm(s.x);
      if (!row.r.empty() && !(r > prev_r)) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "build_sheet: rays z=%.6g and z=%.6g crossed by t=%.6g", prev_z, c.z, tk);
        throw CrossingError(msg);
      }
      double q_t = s.p[0];
      double q_r = (s.p[1] * s.x[1] + s.p[2] * s.x[2] + s.p[3] * s.x[3]) / r;
      if (!(q_r > 0.0) || !(q_t < 0.0))
        throw DegenerateError("build_sheet: ray degenerated (q_r <= 0 or q_t >= 0)");
      row.r.push_back(r);
      row.q.push_back(c.z);
      row.q_t.push_back(q_t);
      row.q_r.push_back(q_r);
      row.mu.push_back(q_t - q_r);
      row.nu.push_back(q_t + q_r);
      prev_r = r;
      prev_z = c.z;
    }
    if (row.r.size() >= 2) rows.push_back(std::move(row));
  }
  return OpticalSheet(region, std::move(rows));
}

OpticalSheet build_sheet(const MetricFamily& fam, const SolutionField& field,
                         const RegionSpec& region, const std::vector<double>& seeds,
                         const std::vector<double>& diag_times, double dq_target,
                         const TraceOptions& opt) {
  if (diag_times.empty()) throw ConfigError("build_sheet: no diagnostic times");
  double t_end = *std::max_element(diag_times.begin(), diag_times.end());
  return build_sheet(region,
                     trace_family(fam, field, region, seeds, diag_times, t_end, opt),
                     dq_target);
}

}  // namespace qwl
