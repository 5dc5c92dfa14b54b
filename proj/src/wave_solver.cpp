#include "qwl/wave_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "qwl/csvio.hpp"
#include "qwl/interp.hpp"

namespace qwl {

namespace {

constexpr double kSpongeSigmaCap = 0.15;  // per-step damping k*sigma bound

double sup_abs_on_validity(const Poly& p, double uv) {
  double m = 0.0;
  for (int i = -64; i <= 64; ++i) m = std::max(m, std::fabs(p(uv * i / 64.0)));
  return m;
}

}  // namespace

Poly RadialBump::mollified() const {
  if (m < 3) throw ConfigError("bump mollifier power must be >= 3 for C^2 support edge");
  int deg = 0;
  for (int i = kMaxPolyDegree; i >= 0; --i)
    if (shape.coef(i) != 0.0) { deg = i; break; }
  if (deg + m > kMaxPolyDegree - 1)
    throw ConfigError("bump profile degree exceeds exact-antiderivative headroom");
  Poly onemx{1.0, -1.0};
  Poly q = shape;
  for (int i = 0; i < m; ++i) q = q * onemx;
  return q;
}

InitialData::InitialData(double epsilon, double R, RadialBump u0, RadialBump u1)
    : epsilon_(epsilon), R_(R), q0_(u0.mollified()), q1_(u1.mollified()) {
  if (!(epsilon >= 0.0)) throw ConfigError("initial-data amplitude must be nonnegative");
  if (!(R > 0.0)) throw ConfigError("support radius must be positive");
  q0_d_ = q0_.derivative();
  q1_i_ = q1_.antiderivative();
}

InitialData InitialData::default_pulse(double epsilon, double R) {
  return InitialData(epsilon, R, RadialBump{Poly{1.0}, 5}, RadialBump{Poly{0.0}, 5});
}

double InitialData::u0(double r) const {
  double xi = (r / R_) * (r / R_);
  return xi >= 1.0 ? 0.0 : q0_(xi);
}

double InitialData::u0_r(double r) const {
  double xi = (r / R_) * (r / R_);
  return xi >= 1.0 ? 0.0 : q0_d_(xi) * 2.0 * r / (R_ * R_);
}

double InitialData::u1(double r) const {
  double xi = (r / R_) * (r / R_);
  return xi >= 1.0 ? 0.0 : q1_(xi);
}

double InitialData::phi(double x) const { return x * u0(std::fabs(x)); }

double InitialData::phi_d(double x) const {
  double a = std::fabs(x);
  return u0(a) + a * u0_r(a);
}

double InitialData::Psi(double x) const {
  double xi = (x / R_) * (x / R_);
  return 0.5 * R_ * R_ * q1_i_(std::min(xi, 1.0));
}

double dalembert_w(const InitialData& d, double t, double r) {
  return 0.5 * (d.phi(r + t) - d.phi(t - r)) + 0.5 * (d.Psi(t + r) - d.Psi(t - r));
}

double dalembert_u(const InitialData& d, double t, double r) {
  double eps = d.epsilon();
  if (std::fabs(r) < 1e-6)
    return eps * (d.phi_d(t) + t * d.u1(std::fabs(t)));
  return eps * dalembert_w(d, t, r) / r;
}

// ---------------------------------------------------------------------------
// Evolution

GridField solve(const MetricFamily& fam, const InitialData& data, double T_max,
                double h, const SolveOptions& opt) {
  if (fam.kind() != MetricFamily::Kind::Isotropic)
    throw ConfigError("wave solve requires an isotropic family c(u)");
  if (data.epsilon() > 0.1)
    throw ConfigError("initial-data amplitude exceeds the small-data regime (eps <= 0.1)");
  if (!(h > 0.0) || !(T_max >= 0.0)) throw ConfigError("need h > 0 and T_max >= 0");

  double c_sup = sup_abs_on_validity(fam.isotropic_c(), fam.u_validity());
  if (!(opt.cfl > 0.0) || opt.cfl > 0.5 + 1e-12)
    throw ConfigError("CFL ratio violates k/h <= 0.5 / sup c");
  double k = opt.cfl * h / c_sup;
  std::size_t n_steps = T_max > 0.0 ? (std::size_t)std::ceil(T_max / k - 1e-12) : 0;
  if (n_steps > 0) k = T_max / (double)n_steps;

  GridField out;
  out.fam_ = fam;
  out.epsilon_ = data.epsilon();
  out.R_ = data.R();
  out.h_ = h;
  out.k_ = k;
  out.t_max_ = T_max;

  // Slice targets: dense start, then geometric spacing, plus requests.
  std::vector<double> targets{0.0};
  if (!opt.store_every_step) {
    for (double t = 0.02; t < std::min(1.0, T_max) + 1e-12; t += 0.02) targets.push_back(t);
    double f = std::max(opt.store_factor, 1.0 + 1e-6);
    for (double t = 1.0; t <= T_max * (1.0 + 1e-12); t *= f) targets.push_back(t);
    for (double t : opt.store_times)
      if (t >= 0.0 && t <= T_max) targets.push_back(t);
    targets.push_back(T_max);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end(),
                              [](double a, double b) { return b - a < 1e-12; }),
                  targets.end());
  }

  const double R = data.R();
  const double eps = data.epsilon();
  const double uv = fam.u_validity();
  const Poly c_poly = fam.isotropic_c();
  const double c0 = c_poly.coef(0), c1 = c_poly.coef(1), c2c = c_poly.coef(2);
  bool c_quad = true;
  for (int i = 3; i <= kMaxPolyDegree; ++i)
    if (c_poly.coef(i) != 0.0) c_quad = false;

  auto j_outer = [&](double t) {
    return (std::int64_t)std::ceil((t + R) / h) + 10;
  };
  std::int64_t j_cap = j_outer(T_max + k) + 2;

  std::vector<double> w_prev((std::size_t)j_cap + 1, 0.0),
      w_cur((std::size_t)j_cap + 1, 0.0), w_next((std::size_t)j_cap + 1, 0.0),
      inv_r((std::size_t)j_cap + 1, 0.0);
  for (std::int64_t j = 1; j <= j_cap; ++j) inv_r[(std::size_t)j] = 1.0 / ((double)j * h);

  auto u_at = [&](const std::vector<double>& w, std::int64_t j) {
    return j == 0 ? (8.0 * w[1] - w[2]) / (6.0 * h) : w[(std::size_t)j] * inv_r[(std::size_t)j];
  };

  // Cauchy data on w = r*u; the first step is a second-order Taylor update.
  std::int64_t j_in = 0, j_out = j_outer(0.0);
  for (std::int64_t j = 0; j <= j_out; ++j) {
    double r = (double)j * h;
    w_prev[(std::size_t)j] = r * eps * data.u0(r);
  }
  for (std::int64_t j = 0; j <= j_out; ++j)
    if (std::fabs(u_at(w_prev, j)) > uv)
      throw StabilityError("initial amplitude already exceeds the validity window");
  const double lam2 = (k / h) * (k / h);

  auto c2_of = [&](double u) {
    double c = c_quad ? c0 + u * (c1 + u * c2c) : c_poly(u);
    return c * c;
  };

  auto record_decay = [&](double t, const std::vector<double>& w) {
    double sup = 0.0, arg = 0.0;
    for (std::int64_t j = j_in; j <= j_out; ++j) {
      double u = std::fabs(u_at(w, j));
      if (u > sup) { sup = u; arg = (double)j * h; }
    }
    out.decay_.push_back({t, sup, arg});
  };

  auto push_slice = [&](double t, const std::vector<double>& w,
                        const std::vector<double>& wt_lo,
                        const std::vector<double>& wt_hi, double two_k) {
    GridField::Slice s;
    s.t = t;
    s.j0 = j_in;
    s.q_usable = j_in > 0 ? ((double)(j_in + opt.sponge_cells)) * h - t
                          : -std::numeric_limits<double>::infinity();
    std::size_t n = (std::size_t)(j_out - j_in) + 1;
    s.w.resize(n);
    s.wt.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = (std::size_t)j_in + i;
      s.w[i] = w[j];
      s.wt[i] = (wt_hi[j] - wt_lo[j]) / two_k;
    }
    out.slices_.push_back(std::move(s));
    record_decay(t, w);
  };

  if (n_steps == 0) {
    // Degenerate run: a single analytic slice.
    GridField::Slice s;
    s.t = 0.0;
    s.j0 = 0;
    s.q_usable = -std::numeric_limits<double>::infinity();
    s.w.assign(w_prev.begin(), w_prev.begin() + (std::ptrdiff_t)j_out + 1);
    s.wt.resize((std::size_t)j_out + 1);
    for (std::int64_t j = 0; j <= j_out; ++j)
      s.wt[(std::size_t)j] = (double)j * h * eps * data.u1((double)j * h);
    out.slices_.push_back(std::move(s));
    record_decay(0.0, w_prev);
    return out;
  }

  // First step.
  j_out = j_outer(k);
  for (std::int64_t j = 1; j < j_out; ++j) {
    std::size_t i = (std::size_t)j;
    double r = (double)j * h;
    double d2 = w_prev[i + 1] - 2.0 * w_prev[i] + w_prev[i - 1];
    w_cur[i] = w_prev[i] + k * r * eps * data.u1(r) +
               0.5 * lam2 * c2_of(u_at(w_prev, j)) * d2;
  }

  // t = 0 slice (exact w_t from the data).
  {
    GridField::Slice s;
    s.t = 0.0;
    s.j0 = 0;
    s.q_usable = -std::numeric_limits<double>::infinity();
    std::int64_t j0e = j_outer(0.0);
    s.w.assign(w_prev.begin(), w_prev.begin() + (std::ptrdiff_t)j0e + 1);
    s.wt.resize((std::size_t)j0e + 1);
    for (std::int64_t j = 0; j <= j0e; ++j)
      s.wt[(std::size_t)j] = (double)j * h * eps * data.u1((double)j * h);
    out.slices_.push_back(std::move(s));
    record_decay(0.0, w_prev);
  }

  std::size_t next_target = 1;  // targets[0] == 0 already stored
  std::vector<double> stash_w, stash_prev;
  double stash_t = -1.0;
  double sigma_max = std::min(80.0, kSpongeSigmaCap / k);

  for (std::size_t n = 1; n <= n_steps + 1; ++n) {
    double t_cur = (double)n * k;  // time of w_cur within this iteration
    bool store_cur;
    if (opt.store_every_step) {
      store_cur = n <= n_steps;
    } else {
      store_cur = false;
      while (next_target < targets.size() && targets[next_target] <= t_cur + 1e-12) {
        store_cur = true;
        ++next_target;
      }
    }
    if (store_cur) {
      stash_w = w_cur;
      stash_prev = w_prev;
      stash_t = t_cur;
    }

    // Advance w_cur(t_cur) -> w_next(t_cur + k).
    double t_next = t_cur + k;
    std::int64_t j_out_new = std::min(j_outer(t_next), j_cap);
    if (opt.truncate_interior) {
      double r_in = t_next - (opt.band_q0 + opt.band_recede * t_next);
      std::int64_t want = (std::int64_t)std::floor(r_in / h) - opt.sponge_cells;
      if (want > j_in) {
        for (std::int64_t j = j_in; j < want; ++j) {
          w_cur[(std::size_t)j] = 0.0;
          w_prev[(std::size_t)j] = 0.0;
        }
        j_in = want;
      }
    }
    for (std::int64_t j = j_in + 1; j < j_out_new; ++j) {
      std::size_t i = (std::size_t)j;
      double u = w_cur[i] * inv_r[i];
      double c = c_quad ? c0 + u * (c1 + u * c2c) : c_poly(u);
      w_next[i] = 2.0 * w_cur[i] - w_prev[i] +
                  lam2 * (c * c) * (w_cur[i + 1] - 2.0 * w_cur[i] + w_cur[i - 1]);
    }
    w_next[(std::size_t)j_in] = 0.0;
    // The front travels at exactly c(0) = 1, so u vanishes for r > t + R;
    // pinning the pad kills the scheme's tiny dispersive leakage there.
    std::int64_t j_cone = (std::int64_t)std::ceil((t_next + R) / h) + 1;
    for (std::int64_t j = std::max(j_in, j_cone); j <= j_out_new; ++j)
      w_next[(std::size_t)j] = 0.0;
    if (j_in > 0) {
      for (int sc = 0; sc < opt.sponge_cells; ++sc) {
        std::size_t i = (std::size_t)(j_in + sc);
        double sfrac = (double)(opt.sponge_cells - sc) / (double)opt.sponge_cells;
        w_next[i] *= 1.0 - k * sigma_max * sfrac * sfrac;
      }
    }
    std::int64_t j_out_old = j_out;
    j_out = j_out_new;

    if (store_cur) {
      j_out = j_out_old;  // slice extent matches its own time
      push_slice(stash_t, stash_w, stash_prev, w_next, 2.0 * k);
      j_out = j_out_new;
    }

    if (n % 64 == 0 || n == n_steps) {
      for (std::int64_t j = j_in; j <= j_out; ++j) {
        double u = u_at(w_next, j);
        if (!std::isfinite(u))
          throw StabilityError("wave solve lost finiteness near t = " + fmt17(t_next));
        if (std::fabs(u) > uv)
          throw StabilityError("wave amplitude left the validity window near t = " +
                               fmt17(t_next));
      }
    }

    std::swap(w_prev, w_cur);
    std::swap(w_cur, w_next);
  }

  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

struct Anchors {
  double W, W1, W2, W3;      // w and r-derivatives of the slice cubic
  double Wt, Wt1, Wt2, Wt3;  // same for the stored w_t
};

// Odd reflection through r = 0 lets cone-aligned queries cross the origin.
Anchors eval_slice(const GridField::Slice& s, double h, double r) {
  double sign = 1.0;
  if (r < 0.0) { r = -r; sign = -1.0; }
  double x = r / h - (double)s.j0;
  double xr = std::round(x);
  if (std::fabs(x - xr) < 1e-9) x = xr;  // node queries reproduce stored values
  std::ptrdiff_t n = (std::ptrdiff_t)s.w.size();
  if (x >= (double)(n - 1)) return {};  // beyond the outer pad: exact zero
  std::ptrdiff_t j = (std::ptrdiff_t)std::floor(x);
  if (j < 1) j = 1;
  if (j > n - 3) j = n - 3;
  double th = x - (double)j;
  auto cube = [&](const std::vector<double>& y, double* d3) {
    LocalCubic c = local_cubic(y[(std::size_t)(j - 1)], y[(std::size_t)j],
                               y[(std::size_t)(j + 1)], y[(std::size_t)(j + 2)], th, h);
    *d3 = (y[(std::size_t)(j + 2)] - 3.0 * y[(std::size_t)(j + 1)] +
           3.0 * y[(std::size_t)j] - y[(std::size_t)(j - 1)]) /
          (h * h * h);
    return c;
  };
  // For the odd extension F(r) = -f(-r): F' = f'(-r), F'' = -f''(-r), etc.
  Anchors a;
  double d3;
  LocalCubic cw = cube(s.w, &d3);
  a.W = sign * cw.value;
  a.W1 = cw.d1;
  a.W2 = sign * cw.d2;
  a.W3 = d3;
  LocalCubic ct = cube(s.wt, &d3);
  a.Wt = sign * ct.value;
  a.Wt1 = ct.d1;
  a.Wt2 = sign * ct.d2;
  a.Wt3 = d3;
  return a;
}

}  // namespace

FieldSample GridField::sample(double t, double r) const {
  if (!(t >= -1e-12) || !(r >= 0.0))
    throw OutOfSlabError("field query outside the stored slab");
  if (r >= t + R_) return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  if (t > t_max_ + 1e-9 * std::max(1.0, t_max_) || slices_.empty())
    throw OutOfSlabError("field query outside the stored slab");

  // Bracketing slices.
  std::size_t b = (std::size_t)(std::lower_bound(slices_.begin(), slices_.end(),
                                                 t - 1e-14,
                                                 [](const Slice& s, double v) {
                                                   return s.t < v;
                                                 }) -
                                slices_.begin());
  if (b >= slices_.size()) b = slices_.size() - 1;
  std::size_t a = b > 0 ? b - 1 : 0;
  if (a == b && slices_.size() >= 2) b = 1;

  const Slice& sa = slices_[a];
  const Slice& sb = slices_[b];
  double qbar = r - t;
  if (qbar < std::max(sa.q_usable, sb.q_usable) + 2.0 * h_)
    throw OutOfSlabError("field query inside the truncated interior");

  double dt = sb.t - sa.t;
  if (dt < 1e-14) {
    // Single-slice slab: spatial cubic only; u_tt falls back on the PDE.
    Anchors A = eval_slice(sa, h_, r);
    double u, u_t, u_r, u_rr, u_tr;
    if (r < 1e-12) {
      u = A.W1; u_t = A.Wt1; u_r = 0.0; u_tr = 0.0; u_rr = A.W3 / 3.0;
    } else {
      u = A.W / r;
      u_t = A.Wt / r;
      u_r = A.W1 / r - A.W / (r * r);
      u_tr = A.Wt1 / r - A.Wt / (r * r);
      u_rr = A.W2 / r - 2.0 * A.W1 / (r * r) + 2.0 * A.W / (r * r * r);
    }
    double c = fam_.isotropic_c()(u);
    double lap = r < 1e-12 ? 3.0 * u_rr : u_rr + 2.0 * u_r / r;
    double u_tt = c * c * lap;
    return {u, u_t, u_r, u_tt, u_tr, u_rr};
  }

  Anchors Aa = eval_slice(sa, h_, qbar + sa.t);
  Anchors Ab = eval_slice(sb, h_, qbar + sb.t);
  double th = (t - sa.t) / dt;

  double h00 = (2.0 * th - 3.0) * th * th + 1.0;
  double h10 = ((th - 2.0) * th + 1.0) * th;
  double h01 = (3.0 - 2.0 * th) * th * th;
  double h11 = (th - 1.0) * th * th;
  double g00 = 6.0 * th * (th - 1.0);
  double g10 = (3.0 * th - 4.0) * th + 1.0;
  double g01 = -g00;
  double g11 = (3.0 * th - 2.0) * th;
  double e00 = 12.0 * th - 6.0;
  double e10 = 6.0 * th - 4.0;
  double e01 = 6.0 - 12.0 * th;
  double e11 = 6.0 * th - 2.0;

  // Hermite along constant r - t: anchors F = w, G = dw/dt|_{r-t} = w_t + w_r.
  double Fa = Aa.W, Ga = Aa.Wt + Aa.W1;
  double Fb = Ab.W, Gb = Ab.Wt + Ab.W1;
  double Fa1 = Aa.W1, Ga1 = Aa.Wt1 + Aa.W2;
  double Fb1 = Ab.W1, Gb1 = Ab.Wt1 + Ab.W2;
  double Fa2 = Aa.W2, Ga2 = Aa.Wt2 + Aa.W3;
  double Fb2 = Ab.W2, Gb2 = Ab.Wt2 + Ab.W3;

  double A0 = h00 * Fa + h10 * dt * Ga + h01 * Fb + h11 * dt * Gb;
  double Aq = h00 * Fa1 + h10 * dt * Ga1 + h01 * Fb1 + h11 * dt * Gb1;
  double Aqq = h00 * Fa2 + h10 * dt * Ga2 + h01 * Fb2 + h11 * dt * Gb2;
  double At = g00 * Fa + g10 * dt * Ga + g01 * Fb + g11 * dt * Gb;
  double Atq = g00 * Fa1 + g10 * dt * Ga1 + g01 * Fb1 + g11 * dt * Gb1;
  double Att = e00 * Fa + e10 * dt * Ga + e01 * Fb + e11 * dt * Gb;

  double w = A0;
  double w_r = Aq;
  double w_t = At / dt - Aq;
  double w_rr = Aqq;
  double w_tr = Atq / dt - Aqq;
  double w_tt = Att / (dt * dt) - 2.0 * Atq / dt + Aqq;

  if (r < 1e-12) {
    double Fa3 = Aa.W3, Ga3 = Aa.Wt3, Fb3 = Ab.W3, Gb3 = Ab.Wt3;
    double Aqqq = h00 * Fa3 + h10 * dt * Ga3 + h01 * Fb3 + h11 * dt * Gb3;
    double Atqq = g00 * Fa2 + g10 * dt * Ga2 + g01 * Fb2 + g11 * dt * Gb2;
    double Attq = e00 * Fa1 + e10 * dt * Ga1 + e01 * Fb1 + e11 * dt * Gb1;
    double u = Aq;
    double u_t = Atq / dt - Aqq;
    double u_rr = Aqqq / 3.0;
    double u_tt = Attq / (dt * dt) - 2.0 * Atqq / dt + Aqqq;
    return {u, u_t, 0.0, u_tt, 0.0, u_rr};
  }

  double ir = 1.0 / r;
  double u = w * ir;
  double u_t = w_t * ir;
  double u_r = (w_r - u) * ir;
  double u_tt = w_tt * ir;
  double u_tr = (w_tr - u_t) * ir;
  double u_rr = (w_rr - 2.0 * u_r) * ir;
  return {u, u_t, u_r, u_tt, u_tr, u_rr};
}

FieldSample4 sample4(const SolutionField& f, const Vec4& x) {
  double r = std::sqrt(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
  if (r < 1e-8) throw DomainError("spacetime sample too close to the spatial axis");
  FieldSample s = f.sample(x[0], r);
  Vec3 n{x[1] / r, x[2] / r, x[3] / r};
  FieldSample4 out;
  out.u = s.u;
  out.du = {s.u_t, s.u_r * n[0], s.u_r * n[1], s.u_r * n[2]};
  out.d2u[0][0] = s.u_tt;
  for (int i = 0; i < 3; ++i) {
    out.d2u[0][i + 1] = out.d2u[i + 1][0] = s.u_tr * n[i];
    for (int j = 0; j < 3; ++j) {
      double delta = i == j ? 1.0 : 0.0;
      out.d2u[i + 1][j + 1] =
          s.u_rr * n[i] * n[j] + s.u_r * (delta - n[i] * n[j]) / r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw IoError("snapshot truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void GridField::save_wnsf(const std::string& path) const {
  std::string buf;
  buf.append("WNSF", 4);
  put<std::uint32_t>(buf, 1u);
  put<double>(buf, h_);
  put<double>(buf, k_);
  put<std::uint32_t>(buf, (std::uint32_t)slices_.size());
  for (const Slice& s : slices_) {
    put<double>(buf, s.t);
    std::uint32_t n = (std::uint32_t)(s.j0 + (std::int64_t)s.w.size());
    put<std::uint32_t>(buf, n);
    for (std::int64_t j = 0; j < s.j0; ++j) put<double>(buf, 0.0);
    for (std::size_t i = 0; i < s.w.size(); ++i) {
      std::int64_t j = s.j0 + (std::int64_t)i;
      double u = j == 0 ? (8.0 * s.w[1] - s.w[2]) / (6.0 * h_)
                        : s.w[i] / ((double)j * h_);
      put<double>(buf, u);
    }
  }
  write_file_bytes(path, buf);
}

Snapshot load_wnsf(const std::string& path) {
  std::string buf = read_file_bytes(path);
  std::size_t pos = 0;
  if (buf.size() < 4 || buf.compare(0, 4, "WNSF") != 0)
    throw IoError("snapshot magic mismatch");
  pos = 4;
  std::uint32_t version = get<std::uint32_t>(buf, pos);
  if (version != 1u) throw IoError("unsupported snapshot version");
  Snapshot snap;
  snap.h = get<double>(buf, pos);
  snap.k = get<double>(buf, pos);
  std::uint32_t ns = get<std::uint32_t>(buf, pos);
  snap.slices.resize(ns);
  for (std::uint32_t i = 0; i < ns; ++i) {
    snap.slices[i].t = get<double>(buf, pos);
    std::uint32_t n = get<std::uint32_t>(buf, pos);
    snap.slices[i].u.resize(n);
    for (std::uint32_t j = 0; j < n; ++j) snap.slices[i].u[j] = get<double>(buf, pos);
  }
  if (pos != buf.size()) throw IoError("snapshot has trailing bytes");
  return snap;
}

void GridField::save_csv(const std::string& path, std::size_t slice_stride,
                         std::size_t point_stride) const {
  if (slice_stride == 0 || point_stride == 0) throw ConfigError("csv strides must be positive");
  CsvWriter csv({"t", "r", "u"});
  for (std::size_t si = 0; si < slices_.size(); si += slice_stride) {
    const Slice& s = slices_[si];
    for (std::size_t i = 0; i < s.w.size(); i += point_stride) {
      std::int64_t j = s.j0 + (std::int64_t)i;
      double u = j == 0 ? (8.0 * s.w[1] - s.w[2]) / (6.0 * h_)
                        : s.w[i] / ((double)j * h_);
      csv.row({s.t, (double)j * h_, u});
    }
  }
  csv.save(path);
}

// ---------------------------------------------------------------------------
// Manufactured cone field

ConeBumpField::ConeBumpField(double epsilon, double R, RadialBump chi,
                             double t_max, MetricFamily fam)
    : epsilon_(epsilon), R_(R), t_max_(t_max), q_(chi.mollified()), fam_(std::move(fam)) {
  if (!(R > 0.0)) throw ConfigError("cone bump needs R > 0");
  qd_ = q_.derivative();
  qdd_ = qd_.derivative();
}

FieldSample ConeBumpField::sample(double t, double r) const {
  if (!(r > 0.0)) throw OutOfSlabError("cone field is defined for r > 0");
  double qbar = r - t;
  if (std::fabs(qbar) >= R_) return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  double xi = (qbar / R_) * (qbar / R_);
  double s = 2.0 * qbar / (R_ * R_);
  double chi = epsilon_ * q_(xi);
  double chi1 = epsilon_ * qd_(xi) * s;
  double chi2 = epsilon_ * (qdd_(xi) * s * s + qd_(xi) * 2.0 / (R_ * R_));
  double ir = 1.0 / r;
  FieldSample out;
  out.u = chi * ir;
  out.u_t = -chi1 * ir;
  out.u_r = chi1 * ir - chi * ir * ir;
  out.u_tt = chi2 * ir;
  out.u_tr = -chi2 * ir + chi1 * ir * ir;
  out.u_rr = chi2 * ir - 2.0 * chi1 * ir * ir + 2.0 * chi * ir * ir * ir;
  return out;
}

ConeBumpField manufactured_field(const RadialBump& chi, double epsilon,
                                 double R, double t_max) {
  return ConeBumpField(epsilon, R, chi, t_max);
}

}  // namespace qwl
