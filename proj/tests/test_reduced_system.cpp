// Reduced-system checks: closed-form evaluators, quadrature for U, the
// numerical ODE cross-check, and the three comparison models with blowup
// detection.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "qwl/csvio.hpp"
#include "qwl/errors.hpp"
#include "qwl/fits.hpp"
#include "qwl/reduced_system.hpp"

using namespace qwl;

namespace {

// Smooth synthetic scattering data supported in q < R with consistent
// product A1*A2 = -2A.
ReducedSolution synthetic_solution(double G = 2.0, double R = 1.0) {
  std::vector<double> q, a1, a2, a;
  const int n = 161;
  for (int i = 0; i < n; ++i) {
    double x = -3.0 + 5.0 * i / (n - 1);  // covers [-3, 2], beyond R = 1
    double bump = (x < R) ? std::exp(-1.5 * (x - 0.2) * (x - 0.2)) * (R - x) : 0.0;
    double A2v = -0.35 * bump;
    double A1v = -2.0 - 0.25 * bump;
    q.push_back(x);
    a1.push_back(A1v);
    a2.push_back(A2v);
    a.push_back(-0.5 * A1v * A2v);
  }
  return ReducedSolution(q, a1, a2, a, G, R);
}

}  // namespace

TEST_CASE("closed-form evaluators: initial data, zero-G freeze, product law") {
  ReducedSolution sol = ReducedSolution::constant(-2.0, 0.3, 0.0, 1.0);
  for (double s : {0.0, 3.0, 17.0}) {
    ReducedPoint p = eval_reduced(sol, s, -0.5);
    CHECK(p.mu == -2.0);  // G = 0 freezes both components
    CHECK(p.U_q == 0.3);
  }

  ReducedSolution sol2 = ReducedSolution::constant(-1.7, -0.4, 2.0, 1.0);
  ReducedPoint p0 = eval_reduced(sol2, 0.0, 0.0);
  CHECK(p0.mu == -1.7);
  CHECK(p0.U_q == -0.4);
  ReducedPoint p10 = eval_reduced(sol2, 10.0, 0.0);
  CHECK(std::fabs(p10.mu * p10.U_q - p0.mu * p0.U_q) <= 1e-14);
}

TEST_CASE("closed form satisfies the reduced ODEs to differencing accuracy") {
  ReducedSolution sol = synthetic_solution();
  const double h = 1e-5;
  for (double q : {-2.0, -0.5, 0.4}) {
    for (double s : {0.0, 2.0, 7.0}) {
      ReducedPoint pm = eval_reduced(sol, s - h, q);
      ReducedPoint pp = eval_reduced(sol, s + h, q);
      ReducedPoint pc = eval_reduced(sol, s, q);
      double dmu = (pp.mu - pm.mu) / (2 * h);
      double duq = (pp.U_q - pm.U_q) / (2 * h);
      CHECK(std::fabs(dmu - 0.25 * sol.G() * pc.mu * pc.mu * pc.U_q) <= 1e-8);
      CHECK(std::fabs(duq + 0.25 * sol.G() * pc.mu * pc.U_q * pc.U_q) <= 1e-8);
    }
  }
}

TEST_CASE("table construction validates product law and coverage") {
  std::vector<double> q{-1.0, 0.0, 1.0, 2.0};
  std::vector<double> a1{-2.0, -2.1, -2.0, -2.0};
  std::vector<double> a2{0.0, -0.2, 0.0, 0.0};
  std::vector<double> a{0.0, -0.21, 0.0, 0.0};
  CHECK_NOTHROW(ReducedSolution(q, a1, a2, a, 2.0, 1.0));

  std::vector<double> bad_a{0.0, -0.2, 0.0, 0.0};  // violates A = -A1*A2/2
  CHECK_THROWS_AS(ReducedSolution(q, a1, a2, bad_a, 2.0, 1.0), ConfigError);
  CHECK_THROWS_AS(ReducedSolution(q, a1, a2, a, 2.0, 5.0), ConfigError);

  ReducedSolution sol(q, a1, a2, a, 2.0, 1.0);
  CHECK(sol.A1(3.0) == -2.0);  // beyond the table: exact exterior data
  CHECK(sol.A2(3.0) == 0.0);
  CHECK(sol.A(3.0) == 0.0);
  CHECK_THROWS_AS(sol.A1(-1.5), CoverageError);
}

TEST_CASE("U evaluator: exterior zero, constant integrand, derivative oracle") {
  ReducedSolution flat = ReducedSolution::constant(-2.0, 0.3, 0.0, 1.0);
  CHECK(eval_U(flat, 4.0, 1.0) == 0.0);
  CHECK(eval_U(flat, 4.0, 2.5) == 0.0);
  CHECK(eval_U(flat, 0.0, 0.0) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(eval_U(flat, 7.0, -1.0) == doctest::Approx(-0.6).epsilon(1e-12));

  ReducedSolution sol = synthetic_solution();
  const double h = 1e-3;
  for (double q : {-1.8, -0.6, 0.3}) {
    for (double s : {0.0, 3.0}) {
      double um2 = eval_U(sol, s, q - 2 * h, 1e-13);
      double um1 = eval_U(sol, s, q - h, 1e-13);
      double up1 = eval_U(sol, s, q + h, 1e-13);
      double up2 = eval_U(sol, s, q + 2 * h, 1e-13);
      double d = (um2 - 8 * um1 + 8 * up1 - up2) / (12 * h);
      CHECK(std::fabs(d - eval_reduced(sol, s, q).U_q) <= 1e-8);
    }
  }
}

TEST_CASE("numerical integration matches the closed form") {
  // U_q = 0 freezes the trajectory entirely.
  ReducedTrajectory frozen = integrate_reduced(-2.0, 0.0, 2.0, 10.0);
  for (std::size_t i = 0; i < frozen.s.size(); ++i) {
    CHECK(frozen.mu[i] == -2.0);
    CHECK(frozen.U_q[i] == 0.0);
  }

  ReducedSolution sol = ReducedSolution::constant(-2.0, 0.3, 2.0, 1.0);
  ReducedTrajectory traj = integrate_reduced(-2.0, 0.3, 2.0, 5.0);
  ReducedPoint closed = eval_reduced(sol, 5.0, 0.0);
  CHECK(std::fabs(traj.mu.back() - closed.mu) <= 1e-10);
  CHECK(std::fabs(traj.U_q.back() - closed.U_q) <= 1e-10);

  double prod0 = traj.mu.front() * traj.U_q.front();
  for (std::size_t i = 0; i < traj.s.size(); ++i)
    CHECK(std::fabs(traj.mu[i] * traj.U_q[i] - prod0) <= 1e-10);
}

TEST_CASE("closed form and integrator agree over random data") {
  std::mt19937 rng(20260815);
  std::uniform_real_distribution<double> dA1(-3.0, -1.0), dA2(-1.0, 1.0), dG(-2.0, 2.0),
      dS(0.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    double A1 = dA1(rng), A2 = dA2(rng), G = dG(rng), s_end = dS(rng);
    ReducedSolution sol = ReducedSolution::constant(A1, A2, G, 1.0);
    ReducedTrajectory traj = integrate_reduced(A1, A2, G, s_end);
    ReducedPoint closed = eval_reduced(sol, s_end, 0.0);
    double scale_mu = std::max(1.0, std::fabs(closed.mu));
    double scale_uq = std::max(1.0, std::fabs(closed.U_q));
    CHECK(std::fabs(traj.mu.back() - closed.mu) <= 1e-10 * scale_mu);
    CHECK(std::fabs(traj.U_q.back() - closed.U_q) <= 1e-10 * scale_uq);
    // mu never changes sign along the trajectory.
    for (double m : traj.mu) CHECK(m * A1 > 0.0);
  }
}

TEST_CASE("riccati comparison: exact catastrophe time and decaying branch") {
  std::vector<double> q(64), v(64, 0.5);
  for (int i = 0; i < 64; ++i) q[i] = -2.0 + 4.0 * i / 63.0;

  ComparisonRun run = hormander_step(q, v, 0.0, ComparisonModel::Riccati, 5.0);
  CHECK(run.blowup);
  CHECK(run.s_star == doctest::Approx(2.0).epsilon(1e-14));

  // Below the catastrophe time the pointwise closed form is returned.
  ComparisonRun pre = hormander_step(q, v, 0.0, ComparisonModel::Riccati, 1.0);
  CHECK_FALSE(pre.blowup);
  CHECK(pre.U_q[10] == doctest::Approx(0.5 / (1.0 - 0.5)).epsilon(1e-14));

  std::vector<double> neg(64, -0.3);
  ComparisonRun decay = hormander_step(q, neg, 0.0, ComparisonModel::Riccati, 100.0);
  CHECK_FALSE(decay.blowup);
  CHECK(decay.U_q[5] == doctest::Approx(-0.3 / 31.0).epsilon(1e-12));
}

TEST_CASE("burgers comparison: sine catastrophe at 20 with agreeing monitor") {
  const int n = 2048;
  const double two_pi = 2.0 * std::acos(-1.0);
  std::vector<double> q(n), v(n);
  for (int i = 0; i < n; ++i) {
    q[i] = two_pi * i / n;  // uniform, periodic layout
    v[i] = -0.1 * std::sin(q[i]);
  }
  ComparisonRun run = hormander_step(q, v, 0.0, ComparisonModel::Burgers, 30.0);
  CHECK(run.blowup);
  CHECK(std::fabs(run.s_star - 20.0) <= 0.4);           // 2% of the analytic time
  CHECK(std::fabs(run.s_star_monitor - run.s_star) <= 0.05 * run.s_star);

  // Stopping short of the catastrophe returns a transported profile with
  // conserved amplitude.
  ComparisonRun pre = hormander_step(q, v, 0.0, ComparisonModel::Burgers, 8.0);
  CHECK_FALSE(pre.blowup);
  double m0 = 0.0, m1 = 0.0;
  for (int i = 0; i < n; ++i) {
    m0 = std::max(m0, std::fabs(v[i]));
    m1 = std::max(m1, std::fabs(pre.U_q[i]));
  }
  CHECK(std::fabs(m1 - m0) <= 0.01 * m0);

  // Slope-free data never crosses characteristics.
  std::vector<double> flat(n, 0.05);
  ComparisonRun calm = hormander_step(q, flat, 0.0, ComparisonModel::Burgers, 30.0);
  CHECK_FALSE(calm.blowup);
  CHECK(std::isnan(calm.s_star));
  CHECK(calm.U_q[100] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("geometric comparison model: G = 0 freeze and global evolution") {
  const int n = 601;
  std::vector<double> q(n), v(n);
  for (int i = 0; i < n; ++i) {
    q[i] = -3.0 + 9.0 * i / (n - 1);
    double x = q[i];
    v[i] = (std::fabs(x) < 1.0) ? 0.25 * std::pow(1.0 - x * x, 4) : 0.0;
  }

  ComparisonRun base = hormander_step(q, v, 0.0, ComparisonModel::GeometricQWE, 0.0);
  ComparisonRun frozen = hormander_step(q, v, 0.0, ComparisonModel::GeometricQWE, 5.0);
  for (int i = 0; i < n; ++i) CHECK(std::fabs(frozen.U_q[i] - base.U_q[i]) <= 1e-12);

  ComparisonRun evolved = hormander_step(q, v, 2.0, ComparisonModel::GeometricQWE, 10.0);
  CHECK_FALSE(evolved.blowup);
  CHECK(evolved.s_reached == doctest::Approx(10.0));
  // Data stays localized on the outgoing side.
  CHECK(std::fabs(evolved.U_q[n - 2]) <= 1e-6);
}

TEST_CASE("geometric model growth stays under the reduced-system rate") {
  // Seed with U_q(0) = A >= 0; the weak-null behavior bounds the growth of
  // sup |U_q| by the closed-form rate max(G*A)/2 up to a small allowance.
  const int n = 601;
  const double G = 2.0;
  std::vector<double> q(n), v(n);
  double a_max = 0.0;
  for (int i = 0; i < n; ++i) {
    q[i] = -3.0 + 9.0 * i / (n - 1);
    double x = q[i];
    v[i] = (std::fabs(x) < 1.0) ? 0.25 * std::pow(1.0 - x * x, 4) : 0.0;
    a_max = std::max(a_max, v[i]);
  }
  std::vector<double> s_list{2.0, 4.0, 6.0, 8.0, 10.0}, sup_list;
  for (double s : s_list) {
    ComparisonRun run = hormander_step(q, v, G, ComparisonModel::GeometricQWE, s);
    double sup = 0.0;
    for (double x : run.U_q) sup = std::max(sup, std::fabs(x));
    sup_list.push_back(std::log(sup));
  }
  double rate = fit_line(s_list, sup_list).slope;
  CHECK(rate <= 0.5 * G * a_max + 0.05);
}

TEST_CASE("reduced solution CSV round trip") {
  ReducedSolution sol = synthetic_solution();
  std::string path = "/tmp/qwl_reduced_roundtrip.csv";
  sol.save_csv(path);
  ReducedSolution back = ReducedSolution::load_csv(path);
  CHECK(back.G() == sol.G());
  CHECK(back.R() == sol.R());
  for (double q : {-2.7, -1.0, 0.0, 0.7, 1.5}) {
    CHECK(back.A1(q) == sol.A1(q));
    CHECK(back.A2(q) == sol.A2(q));
    CHECK(back.A(q) == sol.A(q));
  }
  CHECK(back.to_csv() == sol.to_csv());
  std::remove(path.c_str());

  CHECK_THROWS_AS(ReducedSolution::constant(-2, 0.1, 2, 1).to_csv(), IoError);
}
