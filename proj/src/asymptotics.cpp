#include "qwl/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qwl/csvio.hpp"
#include "qwl/errors.hpp"
#include "qwl/interp.hpp"

namespace qwl {

double s_of_t(const RegionSpec& region, double t) {
  if (!(t > 0.0)) throw DomainError("s_of_t: t must be positive");
  return region.epsilon * std::log(t) - region.delta_eff();
}

double t_of_s(const RegionSpec& region, double s) {
  return region.T0 * std::exp(s / region.epsilon);
}

double invert_q(const OpticalSheet& sheet, double t, double q) {
  const auto& row = sheet.row_at(t);
  if (q > row.q.back()) {
    // Vacuum exterior; same coverage rule as the forward queries.
    if (row.r.back() - t < 2.0 * sheet.region().R - 1e-6)
      throw CoverageError("invert_q: query beyond the outermost ray");
    return t + q;
  }
  if (q < row.q.front()) throw CoverageError("invert_q: query below the innermost ray");

  CubicTable inverse(row.q, row.r, CubicTable::Slopes::Monotone);
  double r = inverse(q);
  // Newton against the forward tables closes the round trip; q_r > 0 is a
  // sheet invariant, so the correction is always defined.
  for (int it = 0; it < 4; ++it) {
    double dq = sheet.q_at(t, r) - q;
    r -= dq / sheet.qr_at(t, r);
    r = std::min(std::max(r, row.r.front()), row.r.back());
  }
  return r;
}

AsymptoticProfile to_asymptotic(const SolutionField& field, const OpticalSheet& sheet,
                                std::vector<double> s_list, const Vec3& omega) {
  if (s_list.empty()) throw ConfigError("to_asymptotic: no diagnostic s-values");
  std::sort(s_list.begin(), s_list.end());
  for (std::size_t k = 0; k + 1 < s_list.size(); ++k)
    if (!(s_list[k] < s_list[k + 1]))
      throw ConfigError("to_asymptotic: duplicate diagnostic s-values");

  const RegionSpec& region = sheet.region();
  AsymptoticProfile prof;
  double wn = std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
  if (!(wn > 0.0)) throw ConfigError("to_asymptotic: zero direction");
  prof.omega = {omega[0] / wn, omega[1] / wn, omega[2] / wn};
  prof.G = null_form_G(field.family(), Direction(prof.omega));
  prof.epsilon = region.epsilon;
  prof.delta_eff = region.delta_eff();
  prof.s = std::move(s_list);
  for (double s : prof.s) {
    double t = t_of_s(region, s);
    if (t > field.t_max() * (1.0 + 1e-12))
      throw CoverageError("to_asymptotic: field does not reach a requested time");
    prof.t.push_back(t);
  }

  prof.q = sheet.row_at(prof.t.front()).q;  // exact ray labels

  const std::size_t K = prof.t.size(), J = prof.q.size();
  prof.mu.assign(K, std::vector<double>(J));
  prof.U.assign(K, std::vector<double>(J));
  prof.U_q.assign(K, std::vector<double>(J));
  for (std::size_t k = 0; k < K; ++k) {
    const double t = prof.t[k];
    for (std::size_t j = 0; j < J; ++j) {
      const double r = invert_q(sheet, t, prof.q[j]);
      const double q_t = sheet.qt_at(t, r);
      const double q_r = sheet.qr_at(t, r);
      const double mu = q_t - q_r;
      if (!(mu < 0.0)) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "to_asymptotic: mu = %.3e >= 0 at (t, q) = (%.6g, %.6g)",
                      mu, t, prof.q[j]);
        throw DegenerateError(msg);
      }
      FieldSample fs = field.sample(t, r);
      prof.mu[k][j] = mu;
      prof.U[k][j] = r * fs.u / prof.epsilon;
      prof.U_q[k][j] = (fs.u + r * fs.u_r) / (prof.epsilon * q_r);
    }
  }

  for (std::size_t k = 1; k + 1 < K; ++k) {
    const double h1 = prof.s[k] - prof.s[k - 1];
    const double h2 = prof.s[k + 1] - prof.s[k];
    const double wm = -h2 / (h1 * (h1 + h2));
    const double w0 = (h2 - h1) / (h1 * h2);
    const double wp = h1 / (h2 * (h1 + h2));
    std::vector<double> r1(J), r2(J);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double mu = prof.mu[k][j], uq = prof.U_q[k][j];
      const double dmu = wm * prof.mu[k - 1][j] + w0 * mu + wp * prof.mu[k + 1][j];
      const double duq = wm * prof.U_q[k - 1][j] + w0 * uq + wp * prof.U_q[k + 1][j];
      r1[j] = dmu - 0.25 * prof.G * mu * mu * uq;
      r2[j] = duq + 0.25 * prof.G * mu * uq * uq;
      s1 = std::max(s1, std::fabs(r1[j]));
      s2 = std::max(s2, std::fabs(r2[j]));
    }
    prof.res_t.push_back(prof.t[k]);
    prof.res1.push_back(std::move(r1));
    prof.res2.push_back(std::move(r2));
    prof.res1_sup.push_back(s1);
    prof.res2_sup.push_back(s2);
  }
  return prof;
}

void ScatteringData::validate() const {
  const std::size_t n = q.size();
  if (A.size() != n || A_err.size() != n || A1.size() != n || A1_err.size() != n ||
      A2.size() != n || A2_err.size() != n || gamma_fit.size() != n)
    throw ConfigError("ScatteringData: ragged columns");
  for (std::size_t j = 0; j < n; ++j)
    if (!(A1[j] < -1.0)) {
      char msg[96];
      std::snprintf(msg, sizeof(msg), "ScatteringData: A1 = %.6g >= -1 at q = %.6g", A1[j], q[j]);
      throw DegenerateError(msg);
    }
}

void ScatteringData::save_csv(const std::string& path) const {
  CsvWriter w({"q", "A", "A_err", "A1", "A1_err", "A2", "A2_err", "gamma_fit"});
  for (std::size_t j = 0; j < q.size(); ++j)
    w.row({q[j], A[j], A_err[j], A1[j], A1_err[j], A2[j], A2_err[j], gamma_fit[j]});
  w.save(path);
}

ScatteringData extract_scattering(const AsymptoticProfile& prof, double G, double band) {
  const std::size_t K = prof.s.size(), J = prof.q.size();
  if (K < 4) throw ConfigError("extract_scattering: profile covers fewer than 4 s-values");

  // Rate fit with the caller's resolution band: a column whose fit finds no
  // decaying structure, but whose total variation is inside the band, has
  // converged as far as the profile can resolve.
  auto fit_col = [band](const std::vector<double>& t, const std::vector<double>& f) {
    try {
      return fit_limit(t, f);
    } catch (const FitError&) {
      auto [lo, hi] = std::minmax_element(f.begin(), f.end());
      if (!(*hi - *lo <= band)) throw;
      LimitFit r;
      r.f_inf = 0.5 * (*lo + *hi);
      r.gamma = 6.0;
      r.error = *hi - *lo;
      return r;
    }
  };

  ScatteringData out;
  out.omega = prof.omega;
  out.G = G;
  out.q = prof.q;
  for (std::size_t j = 0; j < J; ++j) {
    try {
      std::vector<double> f(K);
      for (std::size_t k = 0; k < K; ++k) f[k] = prof.mu[k][j] * prof.U_q[k][j];
      LimitFit fa = fit_col(prof.t, f);
      const double A = -0.5 * fa.f_inf;

      std::vector<double> v1(K), v2(K);
      for (std::size_t k = 0; k < K; ++k) {
        const double w = std::exp(0.5 * G * A * prof.s[k]);
        v1[k] = w * prof.mu[k][j];
        v2[k] = prof.U_q[k][j] / w;
      }
      LimitFit f1 = fit_col(prof.t, v1);
      LimitFit f2 = fit_col(prof.t, v2);

      out.A.push_back(A);
      out.A_err.push_back(0.5 * fa.error);
      out.A1.push_back(f1.f_inf);
      out.A1_err.push_back(f1.error);
      out.A2.push_back(f2.f_inf);
      out.A2_err.push_back(f2.error);
      out.gamma_fit.push_back(fa.gamma);
    } catch (const FitError& e) {
      char msg[160];
      std::snprintf(msg, sizeof(msg), "%s (node q = %.6g)", e.what(), prof.q[j]);
      throw FitError(msg);
    }
  }
  out.validate();
  return out;
}

std::vector<GaugeRow> gauge_compare(const OpticalSheet& sheet1, const ScatteringData& d1,
                                    const OpticalSheet& sheet2, const ScatteringData& d2) {
  std::vector<double> ts;
  for (const auto& row : sheet1.rows())
    for (const auto& other : sheet2.rows())
      if (std::fabs(other.t - row.t) <= 1e-9 * std::max(1.0, std::fabs(row.t))) {
        ts.push_back(row.t);
        break;
      }
  if (ts.size() < 4)
    throw CoverageError("gauge_compare: regions share fewer than four row times");

  // A-bar over the gauge-2 nodes; the ends are constant in the vacuum, so
  // clamping is the right extrapolation there.
  CubicTable Abar(d2.q, d2.A, CubicTable::Slopes::FiniteDifference,
                  CubicTable::OutOfRange::ClampToEnds);

  std::vector<GaugeRow> out;
  for (std::size_t j = 0; j < d1.q.size(); ++j) {
    std::vector<double> tt, qb;
    for (double t : ts) {
      double label;
      try {
        label = sheet2.q_at(t, invert_q(sheet1, t, d1.q[j]));
      } catch (const CoverageError&) {
        continue;  // node outside the shared region at this time
      }
      tt.push_back(t);
      qb.push_back(label);
    }
    if (tt.size() < 4 || !(tt.back() >= 8.0 * tt.front())) continue;
    LimitFit fq = fit_limit(tt, qb);
    GaugeRow g;
    g.q = d1.q[j];
    g.qbar_inf = fq.f_inf;
    g.defect = std::fabs(d1.A[j] - Abar(g.qbar_inf));
    out.push_back(g);
  }
  if (out.empty()) throw CoverageError("gauge_compare: no node covered by both sheets");
  return out;
}

}  // namespace qwl
