// Null frames along bicharacteristics: parallel-transported sphere tangents,
// the rebuilt null pair (e3, e4), the second fundamental form chi from a
// cross-ray stencil, and the Raychaudhuri consistency residual.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "qwl/geodesic_eikonal.hpp"
#include "qwl/metric.hpp"
#include "qwl/wave_solver.hpp"

namespace qwl {

// e4 = L / L^0 with L^a = 2 g^{ab} p_b; e3 = e4 + 2 g^{0a} d_a;
// e1, e2 = transported sphere tangents with their 0-component projected out.
struct Frame {
  Vec4 e1, e2, e3, e4;
};

// Max deviation of the ten inner products <e_i, e_j> from their exact values
// (<e4,e4> = <e3,e3> = 0, <e3,e4> = 2, <e_a,e_b> = delta, mixed zero).
double frame_defect(const MetricFamily& fam, double u, const Frame& f);

// Frame at the seed of a traced ray. The sphere tangents start euclidean-
// orthogonal to omega (rotated by rotate_basis in their plane) and are
// orthonormalized in the spatial metric; radial p makes them automatically
// orthogonal to e4. DegenerateError if L^0 <= 0.
Frame seed_frame(const MetricFamily& fam, const SolutionField& field,
                 const Bicharacteristic& geo, double rotate_basis = 0.0);

struct TransportOptions {
  double rk_tol = 1e-10;
  double h_max = 25.0;
  double frame_tol = 1e-6;  // hard bound on any frame-product defect
};

struct FrameSample {
  double sigma;
  Vec4 x, p;
  Vec4 E1, E2;  // raw transported tangents
  Frame frame;
  double defect;
};

struct FrameRecord {
  double z = 0.0;
  Vec3 omega{1.0, 0.0, 0.0};
  std::vector<FrameSample> samples;
  std::vector<FrameSample> at_times;
  std::vector<double> land_times;
};

// Re-integrates (x, p, E1, E2) jointly from the seed of `geo` over the same
// span and landing times, rebuilding the full frame at every accepted step.
// FrameDriftError if any sample's product defect exceeds frame_tol.
FrameRecord transport(const MetricFamily& fam, const SolutionField& field,
                      const Bicharacteristic& geo, const Frame& frame0,
                      const TransportOptions& opt = {});

// R_{abmn} = <R(d_a, d_b) d_m, d_n>, from exact u-derivatives of the metric
// and the sampled du, d2u.
using Riemann4 = std::array<std::array<Mat4, 4>, 4>;
Riemann4 riemann_lower(const MetricFamily& fam, double u, const Vec4& du, const Mat4& d2u);

struct BundleOptions {
  double stencil_offset = 1e-2;  // seed rotation angle of the ring rays
  double rotate_basis = 0.0;     // rotates both the tangents and the ring
  TraceOptions trace;            // shared by the center and ring rays
  TransportOptions transport;
};

// A center ray with its transported frame plus four ring rays whose seeds
// are rotated by +/- offset along the two sphere tangents; the ring supplies
// the cross-ray derivatives of e4.
struct FrameBundle {
  Bicharacteristic center;
  FrameRecord record;
  std::array<Bicharacteristic, 4> ring;  // +t1, -t1, +t2, -t2
  Vec3 t1, t2;
  double offset = 0.0;
};

FrameBundle trace_bundle(const MetricFamily& fam, const SolutionField& field,
                         const RegionSpec& region, double z, const Vec3& omega, double t_end,
                         const BundleOptions& opt = {});

struct ChiSample {
  double t = 0.0;
  double r = 0.0;
  double chi11 = 0.0, chi12 = 0.0, chi22 = 0.0;  // symmetrized
  double tr_chi = 0.0;
  double asym = 0.0;    // |chi_12 - chi_21| before symmetrization
  double defect = 0.0;  // frame-product defect at this row
};

// chi_ab = (e_a(e4^al) + e_a^m e4^n Gamma^al_mn) g_{al be} e_b^be at every
// landing time, with e_a(e4) from centered differences across the ring.
// StencilError if a ring ray misses a landing; DegenerateError if tr chi <= 0
// anywhere (the positivity of the null mean curvature is a hard invariant).
std::vector<ChiSample> second_fundamental_form(const MetricFamily& fam,
                                               const SolutionField& field,
                                               const FrameBundle& bundle);

struct RaychSample {
  double t = 0.0;
  double defect = 0.0;  // max_ab |e4(chi) + chi^2 - Gamma^0(e4,e4) chi - <R(e4,a)e4,b>|
  double scale = 0.0;   // magnitude of the chi^2 term, for relative context
};

// Evaluated at interior chi rows; e4(chi) uses the nonuniform three-point
// derivative over consecutive landing times, so the caller controls the
// truncation error through the spacing of the diagnostic times.
std::vector<RaychSample> raychaudhuri_residual(const MetricFamily& fam,
                                               const SolutionField& field,
                                               const FrameBundle& bundle,
                                               const std::vector<ChiSample>& chi);

// Columns: t,r,chi11,chi12,chi22,trchi,frame_defect_max,raych_defect
// (one row per Raychaudhuri-evaluable landing time).
void save_frame_csv(const std::string& path, const std::vector<ChiSample>& chi,
                    const std::vector<RaychSample>& raych);

}  // namespace qwl
