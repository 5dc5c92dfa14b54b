#include "qwl/null_frame.hpp"

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

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 unit3(const Vec3& v) {
  double n = std::sqrt(dot3(v, v));
  if (!(n > 0.0)) throw DegenerateError("null_frame: zero direction");
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Deterministic sphere-tangent pair at omega, rotated in its plane.
void tangent_basis(const Vec3& omega, double rotate, Vec3& t1, Vec3& t2) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::fabs(omega[i]) < std::fabs(omega[k])) k = i;
  Vec3 axis{0.0, 0.0, 0.0};
  axis[k] = 1.0;
  double d = dot3(axis, omega);
  t1 = unit3({axis[0] - d * omega[0], axis[1] - d * omega[1], axis[2] - d * omega[2]});
  t2 = cross3(omega, t1);
  if (rotate != 0.0) {
    double c = std::cos(rotate), s = std::sin(rotate);
    Vec3 a = t1, b = t2;
    for (int i = 0; i < 3; ++i) {
      t1[i] = c * a[i] + s * b[i];
      t2[i] = -s * a[i] + c * b[i];
    }
  }
}

Vec4 e4_from(const Mat4& inv, const Vec4& p) {
  Vec4 L{};
  for (int a = 0; a < 4; ++a) {
    double s = 0.0;
    for (int b = 0; b < 4; ++b) s += inv[a][b] * p[b];
    L[a] = 2.0 * s;
  }
  if (!(L[0] > 0.0)) throw DegenerateError("null frame: L^0 <= 0");
  return {1.0, L[1] / L[0], L[2] / L[0], L[3] / L[0]};
}

Frame rebuild_frame(const MetricFamily& fam, double u, const Vec4& p, const Vec4& E1,
                    const Vec4& E2) {
  const Mat4 inv = eval_inverse_metric(fam, u);
  Frame f;
  f.e4 = e4_from(inv, p);
  for (int a = 0; a < 4; ++a) f.e3[a] = f.e4[a] + 2.0 * inv[0][a];
  for (int a = 0; a < 4; ++a) {
    f.e1[a] = E1[a] - E1[0] * f.e4[a];
    f.e2[a] = E2[a] - E2[0] * f.e4[a];
  }
  return f;
}

double ip(const Mat4& low, const Vec4& a, const Vec4& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += low[i][j] * a[i] * b[j];
  return s;
}

}  // namespace

double frame_defect(const MetricFamily& fam, double u, const Frame& f) {
  const Mat4 low = eval_lower_metric(fam, u);
  double w = 0.0;
  w = std::max(w, std::fabs(ip(low, f.e4, f.e4)));
  w = std::max(w, std::fabs(ip(low, f.e3, f.e3)));
  w = std::max(w, std::fabs(ip(low, f.e3, f.e4) - 2.0));
  w = std::max(w, std::fabs(ip(low, f.e1, f.e1) - 1.0));
  w = std::max(w, std::fabs(ip(low, f.e2, f.e2) - 1.0));
  w = std::max(w, std::fabs(ip(low, f.e1, f.e2)));
  w = std::max(w, std::fabs(ip(low, f.e4, f.e1)));
  w = std::max(w, std::fabs(ip(low, f.e4, f.e2)));
  w = std::max(w, std::fabs(ip(low, f.e3, f.e1)));
  w = std::max(w, std::fabs(ip(low, f.e3, f.e2)));
  return w;
}

Frame seed_frame(const MetricFamily& fam, const SolutionField& field,
                 const Bicharacteristic& geo, double rotate_basis) {
  if (geo.samples.empty()) throw ConfigError("seed_frame: empty geodesic");
  const auto& s0 = geo.samples.front();
  const double r = spatial_norm(s0.x);
  const Vec3 omega{s0.x[1] / r, s0.x[2] / r, s0.x[3] / r};
  const double u = field.sample(s0.x[0], r).u;

  Vec3 t1, t2;
  tangent_basis(omega, rotate_basis, t1, t2);

  // Orthonormalize the tangents in the spatial metric; they stay euclidean-
  // orthogonal to omega, which with radial p is orthogonality to e4.
  const Mat4 low = eval_lower_metric(fam, u);
  auto B = [&](const Vec3& a, const Vec3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += low[i + 1][j + 1] * a[i] * b[j];
    return s;
  };
  double n1 = B(t1, t1);
  if (!(n1 > 0.0)) throw DegenerateError("seed_frame: spatial metric not positive");
  for (int i = 0; i < 3; ++i) t1[i] /= std::sqrt(n1);
  double m = B(t2, t1);
  for (int i = 0; i < 3; ++i) t2[i] -= m * t1[i];
  double n2 = B(t2, t2);
  if (!(n2 > 0.0)) throw DegenerateError("seed_frame: spatial metric not positive");
  for (int i = 0; i < 3; ++i) t2[i] /= std::sqrt(n2);

  Vec4 E1{0.0, t1[0], t1[1], t1[2]};
  Vec4 E2{0.0, t2[0], t2[1], t2[2]};
  return rebuild_frame(fam, u, s0.p, E1, E2);
}

FrameRecord transport(const MetricFamily& fam, const SolutionField& field,
                      const Bicharacteristic& geo, const Frame& frame0,
                      const TransportOptions& opt) {
  if (geo.samples.empty()) throw ConfigError("transport: empty geodesic");
  const auto& s0 = geo.samples.front();
  const double t_end = geo.samples.back().x[0];

  FrameRecord rec;
  rec.z = geo.z;
  rec.omega = geo.omega;

  using State = std::array<double, 16>;
  State y{};
  for (int i = 0; i < 4; ++i) {
    y[i] = s0.x[i];
    y[i + 4] = s0.p[i];
    y[i + 8] = frame0.e1[i];
    y[i + 12] = frame0.e2[i];
  }

  auto rhs = [&](double, const State& s, State& ds) {
    Vec4 x{std::min(s[0], t_end), s[1], s[2], s[3]};
    Vec4 p{s[4], s[5], s[6], s[7]};
    FieldSample4 loc = sample4(field, x);
    GeodesicRhs g = geodesic_rhs(fam, loc, p);
    Christoffel gam = christoffel(fam, loc.u, loc.du);
    for (int i = 0; i < 4; ++i) {
      ds[i] = g.xdot[i];
      ds[i + 4] = g.pdot[i];
    }
    for (int e = 0; e < 2; ++e) {
      const int off = 8 + 4 * e;
      for (int a = 0; a < 4; ++a) {
        double acc = 0.0;
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) acc += g.xdot[m] * s[off + n] * gam[a][m][n];
        ds[off + a] = -acc;
      }
    }
  };

  auto res_at = [&](const State& s) {
    double t = std::min(s[0], t_end);
    double r = std::sqrt(s[1] * s[1] + s[2] * s[2] + s[3] * s[3]);
    Vec4 p{s[4], s[5], s[6], s[7]};
    return null_residual(fam, field.sample(t, r).u, p);
  };
  double prev_res = std::fabs(res_at(y));
  double sigma_acc = 0.0;
  auto accept = [&](double s_new, const State& s) {
    if (s_new - sigma_acc <= 1e-7) return true;
    return std::fabs(res_at(s)) <= std::max(0.5 * 1e-8, 1.5 * prev_res + 1e-13);
  };
  auto obs = [&](double sigma, const State& s) {
    if (!rec.samples.empty() && sigma == rec.samples.back().sigma) return;
    sigma_acc = sigma;
    prev_res = std::fabs(res_at(s));
    FrameSample smp;
    smp.sigma = sigma;
    smp.x = {s[0], s[1], s[2], s[3]};
    smp.p = {s[4], s[5], s[6], s[7]};
    smp.E1 = {s[8], s[9], s[10], s[11]};
    smp.E2 = {s[12], s[13], s[14], s[15]};
    double u = field.sample(std::min(s[0], t_end), spatial_norm(smp.x)).u;
    smp.frame = rebuild_frame(fam, u, smp.p, smp.E1, smp.E2);
    smp.defect = frame_defect(fam, u, smp.frame);
    rec.samples.push_back(smp);
  };

  Rk45Options rko;
  rko.abs_tol = rko.rel_tol = opt.rk_tol;
  rko.h_max = opt.h_max;
  auto comp = [](const State& s) { return s[0]; };

  double sigma = 0.0;
  for (double tk : geo.land_times) {
    sigma = rk45_to_target<16>(rhs, y, sigma, comp, tk, rko, obs, accept);
    rec.land_times.push_back(tk);
    rec.at_times.push_back(rec.samples.back());
  }
  if (y[0] < t_end - 1e-9 * std::max(1.0, t_end))
    rk45_to_target<16>(rhs, y, sigma, comp, t_end, rko, obs, accept);

  for (const auto& s : rec.samples)
    if (s.defect > opt.frame_tol) {
      char msg[120];
      std::snprintf(msg, sizeof(msg), "transport: frame defect %.3e exceeds %.1e at t=%.6g",
                    s.defect, opt.frame_tol, s.x[0]);
      throw FrameDriftError(msg);
    }
  return rec;
}

Riemann4 riemann_lower(const MetricFamily& fam, double u, const Vec4& du, const Mat4& d2u) {
  const Mat4 inv = eval_inverse_metric(fam, u);
  const Mat4 invd1 = inverse_metric_d1(fam, u);
  const Mat4 low = eval_lower_metric(fam, u);
  const Mat4 lowd1 = lower_metric_d1(fam, u);
  const Mat4 lowd2 = lower_metric_d2(fam, u);

  // dg[a][b][m] = d_m g_ab, ddg[a][b][m][n] = d_m d_n g_ab by the chain rule
  // through u; the u-derivatives of the family are exact.
  double dg[4][4][4];
  double ddg[4][4][4][4];
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int m = 0; m < 4; ++m) {
        dg[a][b][m] = lowd1[a][b] * du[m];
        for (int n = 0; n < 4; ++n)
          ddg[a][b][m][n] = lowd2[a][b] * du[m] * du[n] + lowd1[a][b] * d2u[m][n];
      }

  // Lowered bracket and symbols.
  double brak[4][4][4];  // brak[b][m][n] = d_m g_nb + d_n g_mb - d_b g_mn
  for (int b = 0; b < 4; ++b)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n)
        brak[b][m][n] = dg[n][b][m] + dg[m][b][n] - dg[m][n][b];
  double gam[4][4][4];
  for (int a = 0; a < 4; ++a)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b) acc += inv[a][b] * brak[b][m][n];
        gam[a][m][n] = 0.5 * acc;
      }
  // dgam[c][a][m][n] = d_c Gamma^a_mn
  double dgam[4][4][4][4];
  for (int c = 0; c < 4; ++c)
    for (int a = 0; a < 4; ++a)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          double acc = 0.0;
          for (int b = 0; b < 4; ++b) {
            double dbrak = ddg[n][b][m][c] + ddg[m][b][n][c] - ddg[m][n][b][c];
            acc += invd1[a][b] * du[c] * brak[b][m][n] + inv[a][b] * dbrak;
          }
          dgam[c][a][m][n] = 0.5 * acc;
        }

  // R(d_a, d_b) d_m = [d_a Gam^d_bm - d_b Gam^d_am + Gam^d_al Gam^l_bm
  //                    - Gam^d_bl Gam^l_am] d_d, lowered with g_dn.
  Riemann4 out{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int m = 0; m < 4; ++m) {
        double up[4];
        for (int d = 0; d < 4; ++d) {
          double acc = dgam[a][d][b][m] - dgam[b][d][a][m];
          for (int l = 0; l < 4; ++l)
            acc += gam[d][a][l] * gam[l][b][m] - gam[d][b][l] * gam[l][a][m];
          up[d] = acc;
        }
        for (int n = 0; n < 4; ++n) {
          double acc = 0.0;
          for (int d = 0; d < 4; ++d) acc += low[d][n] * up[d];
          out[a][b][m][n] = acc;
        }
      }
  return out;
}

FrameBundle trace_bundle(const MetricFamily& fam, const SolutionField& field,
                         const RegionSpec& region, double z, const Vec3& omega, double t_end,
                         const BundleOptions& opt) {
  if (!(opt.stencil_offset > 0.0)) throw ConfigError("trace_bundle: offset must be positive");
  FrameBundle b;
  Vec3 w = unit3(omega);
  tangent_basis(w, opt.rotate_basis, b.t1, b.t2);
  b.offset = opt.stencil_offset;

  b.center = trace(fam, field, region, region.seed_point(z, w), t_end, opt.trace);
  Frame f0 = seed_frame(fam, field, b.center, opt.rotate_basis);
  b.record = transport(fam, field, b.center, f0, opt.transport);

  const double c = std::cos(opt.stencil_offset), s = std::sin(opt.stencil_offset);
  const std::array<Vec3, 4> dirs{
      Vec3{c * w[0] + s * b.t1[0], c * w[1] + s * b.t1[1], c * w[2] + s * b.t1[2]},
      Vec3{c * w[0] - s * b.t1[0], c * w[1] - s * b.t1[1], c * w[2] - s * b.t1[2]},
      Vec3{c * w[0] + s * b.t2[0], c * w[1] + s * b.t2[1], c * w[2] + s * b.t2[2]},
      Vec3{c * w[0] - s * b.t2[0], c * w[1] - s * b.t2[1], c * w[2] - s * b.t2[2]}};
  for (int k = 0; k < 4; ++k)
    b.ring[k] = trace(fam, field, region, region.seed_point(z, dirs[k]), t_end, opt.trace);
  return b;
}

std::vector<ChiSample> second_fundamental_form(const MetricFamily& fam,
                                               const SolutionField& field,
                                               const FrameBundle& bundle) {
  std::vector<ChiSample> out;
  const auto& rec = bundle.record;
  for (std::size_t k = 0; k < rec.land_times.size(); ++k) {
    const double tk = rec.land_times[k];

    std::array<const BicharSample*, 4> ring{};
    for (int j = 0; j < 4; ++j) {
      const auto& lt = bundle.ring[j].land_times;
      auto it = std::find(lt.begin(), lt.end(), tk);
      if (it == lt.end()) throw StencilError("second_fundamental_form: ring ray misses a time");
      ring[j] = &bundle.ring[j].at_times[static_cast<std::size_t>(it - lt.begin())];
    }
    const FrameSample& ctr = rec.at_times[k];

    FieldSample4 loc = sample4(field, ctr.x);
    const Mat4 low = eval_lower_metric(fam, loc.u);
    const Christoffel gam = christoffel(fam, loc.u, loc.du);

    // Ring e4 and the cross-ray differences.
    std::array<Vec4, 4> e4r;
    for (int j = 0; j < 4; ++j) {
      const Mat4 invj = eval_inverse_metric(fam, field.sample(ring[j]->x[0],
                                                              spatial_norm(ring[j]->x)).u);
      e4r[j] = e4_from(invj, ring[j]->p);
    }
    Vec3 d1{}, d2{};
    Vec4 D1{}, D2{};
    for (int i = 0; i < 3; ++i) {
      d1[i] = 0.5 * (ring[0]->x[i + 1] - ring[1]->x[i + 1]);
      d2[i] = 0.5 * (ring[2]->x[i + 1] - ring[3]->x[i + 1]);
    }
    for (int a = 0; a < 4; ++a) {
      D1[a] = 0.5 * (e4r[0][a] - e4r[1][a]);
      D2[a] = 0.5 * (e4r[2][a] - e4r[3][a]);
    }

    // Express the tangential part of e_a in the chord basis (d1, d2).
    const double G11 = dot3(d1, d1), G12 = dot3(d1, d2), G22 = dot3(d2, d2);
    const double det = G11 * G22 - G12 * G12;
    if (!(std::fabs(det) > 1e-30)) throw StencilError("second_fundamental_form: stencil collapsed");
    const Vec4 ea[2] = {ctr.frame.e1, ctr.frame.e2};
    const Vec4 e4 = ctr.frame.e4;

    double chi[2][2];
    for (int a = 0; a < 2; ++a) {
      Vec3 sp{ea[a][1], ea[a][2], ea[a][3]};
      double r1 = dot3(sp, d1), r2 = dot3(sp, d2);
      double c1 = (G22 * r1 - G12 * r2) / det;
      double c2 = (G11 * r2 - G12 * r1) / det;
      Vec4 M;
      for (int al = 0; al < 4; ++al) {
        double cov = c1 * D1[al] + c2 * D2[al];
        for (int m = 0; m < 4; ++m)
          for (int n = 0; n < 4; ++n) cov += ea[a][m] * e4[n] * gam[al][m][n];
        M[al] = cov;
      }
      for (int bb = 0; bb < 2; ++bb) chi[a][bb] = ip(low, M, ea[bb]);
    }

    ChiSample cs;
    cs.t = tk;
    cs.r = spatial_norm(ctr.x);
    cs.asym = std::fabs(chi[0][1] - chi[1][0]);
    cs.chi11 = chi[0][0];
    cs.chi12 = 0.5 * (chi[0][1] + chi[1][0]);
    cs.chi22 = chi[1][1];
    cs.tr_chi = chi[0][0] + chi[1][1];
    cs.defect = ctr.defect;
    if (!(cs.tr_chi > 0.0))
      throw DegenerateError("second_fundamental_form: tr chi <= 0 (focusing ahead of schedule)");
    out.push_back(cs);
  }
  return out;
}

std::vector<RaychSample> raychaudhuri_residual(const MetricFamily& fam,
                                               const SolutionField& field,
                                               const FrameBundle& bundle,
                                               const std::vector<ChiSample>& chi) {
  const auto& rec = bundle.record;
  if (chi.size() != rec.at_times.size())
    throw ConfigError("raychaudhuri_residual: chi rows do not match the record");
  std::vector<RaychSample> out;
  for (std::size_t i = 1; i + 1 < chi.size(); ++i) {
    const double h1 = chi[i].t - chi[i - 1].t;
    const double h2 = chi[i + 1].t - chi[i].t;
    const double wm = -h2 / (h1 * (h1 + h2));
    const double w0 = (h2 - h1) / (h1 * h2);
    const double wp = h1 / (h2 * (h1 + h2));
    auto mat = [](const ChiSample& c) {
      return std::array<double, 4>{c.chi11, c.chi12, c.chi12, c.chi22};
    };
    auto cm = mat(chi[i - 1]), c0 = mat(chi[i]), cp = mat(chi[i + 1]);

    const FrameSample& ctr = rec.at_times[i];
    FieldSample4 loc = sample4(field, ctr.x);
    const Christoffel gam = christoffel(fam, loc.u, loc.du);
    const Riemann4 R = riemann_lower(fam, loc.u, loc.du, loc.d2u);
    const Vec4 e4 = ctr.frame.e4;
    const Vec4 ea[2] = {ctr.frame.e1, ctr.frame.e2};

    double g0 = 0.0;
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) g0 += gam[0][m][n] * e4[m] * e4[n];

    RaychSample rs;
    rs.t = chi[i].t;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const int ab = 2 * a + b;
        // e4 has unit time component, so e4(f) along the ray is df/dt.
        double dchi = wm * cm[ab] + w0 * c0[ab] + wp * cp[ab];
        double chisq = c0[2 * a] * c0[b] + c0[2 * a + 1] * c0[2 + b];
        double curv = 0.0;
        for (int al = 0; al < 4; ++al)
          for (int be = 0; be < 4; ++be)
            for (int mu = 0; mu < 4; ++mu)
              for (int nu = 0; nu < 4; ++nu)
                curv += R[al][be][mu][nu] * e4[al] * ea[a][be] * e4[mu] * ea[b][nu];
        double defect = dchi + chisq - g0 * c0[ab] - curv;
        rs.defect = std::max(rs.defect, std::fabs(defect));
        rs.scale = std::max(rs.scale, std::fabs(chisq));
      }
    out.push_back(rs);
  }
  return out;
}

void save_frame_csv(const std::string& path, const std::vector<ChiSample>& chi,
                    const std::vector<RaychSample>& raych) {
  CsvWriter w({"t", "r", "chi11", "chi12", "chi22", "trchi", "frame_defect_max",
               "raych_defect"});
  for (const auto& rs : raych) {
    const ChiSample* cs = nullptr;
    for (const auto& c : chi)
      if (c.t == rs.t) {
        cs = &c;
        break;
      }
    if (!cs) throw ConfigError("save_frame_csv: raych row without a chi row");
    w.row({cs->t, cs->r, cs->chi11, cs->chi12, cs->chi22, cs->tr_chi, cs->defect, rs.defect});
  }
  w.save(path);
}

}  // namespace qwl
