// Metric family checks: inversion identities, Christoffel symbols against a
// finite-difference oracle, the null form G, and construction validation.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qwl/errors.hpp"
#include "qwl/metric.hpp"

using namespace qwl;

namespace {

Mat4 zero_mat() { return Mat4{}; }

// Random symmetric term with zero 00-component, entries in [-0.3, 0.3].
Mat4 random_term(std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-0.3, 0.3);
  Mat4 m = zero_mat();
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      if (i == 0 && j == 0) continue;
      m[i][j] = m[j][i] = dist(rng);
    }
  return m;
}

Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> dist;
  while (true) {
    Vec3 v{dist(rng), dist(rng), dist(rng)};
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n > 1e-3) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

// Random rotation via Gram-Schmidt on random vectors.
std::array<Vec3, 3> random_rotation(std::mt19937& rng) {
  Vec3 a = random_unit(rng);
  Vec3 b;
  while (true) {
    b = random_unit(rng);
    double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    for (int i = 0; i < 3; ++i) b[i] -= d * a[i];
    double n = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    if (n > 1e-3) {
      for (int i = 0; i < 3; ++i) b[i] /= n;
      break;
    }
  }
  Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return {a, b, c};
}

double max_abs_diff(const Mat4& a, const Mat4& b) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m = std::max(m, std::fabs(a[i][j] - b[i][j]));
  return m;
}

}  // namespace

TEST_CASE("inverse metric is Minkowski at u = 0 for every family") {
  std::mt19937 rng(12345);
  std::vector<MetricFamily> fams;
  fams.push_back(MetricFamily::flat());
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u"));
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u+0.5u^2"));
  fams.push_back(MetricFamily::general({random_term(rng), random_term(rng)}));
  Mat4 mink = zero_mat();
  mink[0][0] = -1;
  mink[1][1] = mink[2][2] = mink[3][3] = 1;
  for (const auto& fam : fams) {
    CHECK(max_abs_diff(eval_inverse_metric(fam, 0.0), mink) == 0.0);
    CHECK(max_abs_diff(eval_lower_metric(fam, 0.0), mink) <= 1e-15);
  }
}

TEST_CASE("isotropic family evaluates c(u)^2 on the spatial block") {
  MetricFamily fam = MetricFamily::from_preset("isotropic:c=1+u");
  Mat4 g = eval_inverse_metric(fam, 0.1);
  CHECK(g[0][0] == -1.0);
  for (int i = 1; i < 4; ++i) {
    CHECK(g[i][i] == doctest::Approx(1.21).epsilon(1e-15));
    CHECK(g[0][i] == 0.0);
    for (int j = 1; j < 4; ++j)
      if (i != j) CHECK(g[i][j] == 0.0);
  }
  Mat4 low = eval_lower_metric(fam, 0.1);
  for (int i = 1; i < 4; ++i) CHECK(low[i][i] == doctest::Approx(1.0 / 1.21).epsilon(1e-14));
}

TEST_CASE("linear general family shifts the spatial diagonal") {
  Mat4 g1 = zero_mat();
  g1[1][1] = g1[2][2] = g1[3][3] = 1.0;
  MetricFamily fam = MetricFamily::general({g1});
  Mat4 g = eval_inverse_metric(fam, 0.05);
  CHECK(g[0][0] == -1.0);
  for (int i = 1; i < 4; ++i) CHECK(g[i][i] == doctest::Approx(1.05).epsilon(1e-15));
}

TEST_CASE("evaluation outside u_validity is rejected") {
  MetricFamily fam = MetricFamily::from_preset("isotropic:c=1+u");
  CHECK_THROWS_AS(eval_inverse_metric(fam, 0.21), DomainError);
  CHECK_THROWS_AS(eval_lower_metric(fam, -0.3), DomainError);
  CHECK_THROWS_AS(christoffel(fam, 0.5, {0, 0, 0, 0}), DomainError);
  CHECK_NOTHROW(eval_inverse_metric(fam, 0.2));
}

TEST_CASE("lower times inverse metric is the identity") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u_dist(-0.15, 0.15);
  for (int trial = 0; trial < 40; ++trial) {
    MetricFamily fam = (trial % 2 == 0)
                           ? MetricFamily::general({random_term(rng), random_term(rng)})
                           : MetricFamily::from_preset("isotropic:c=1+u+0.5u^2");
    double u = u_dist(rng);
    Mat4 low = eval_lower_metric(fam, u);
    Mat4 up = eval_inverse_metric(fam, u);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += low[i][k] * up[k][j];
        CHECK(std::fabs(acc - (i == j ? 1.0 : 0.0)) <= 1e-12);
      }
  }
}

TEST_CASE("christoffel vanishes for flat data and u-independent families") {
  MetricFamily iso = MetricFamily::from_preset("isotropic:c=1+u");
  Christoffel valat_zero = christoffel(iso, 0.13, {0, 0, 0, 0});
  for (int a = 0; a < 4; ++a)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) CHECK(valat_zero[a][m][n] == 0.0);

  MetricFamily flat = MetricFamily::flat();
  Christoffel val_flat = christoffel(flat, 0.1, {0.3, -0.2, 0.1, 0.5});
  for (int a = 0; a < 4; ++a)
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) CHECK(val_flat[a][m][n] == 0.0);
}

TEST_CASE("christoffel matches the finite-difference oracle") {
  // Manufactured scalar field u(t,x) with exact gradient; the oracle builds
  // d_mu g_{nu beta} by central differences of the lowered metric along the
  // composed field and contracts the textbook formula.
  auto u_field = [](const Vec4& x) {
    return 0.08 * std::sin(0.3 * x[0] + 0.5 * x[1] - 0.4 * x[2] + 0.7 * x[3] + 0.2);
  };
  auto du_field = [](const Vec4& x) {
    double c = 0.08 * std::cos(0.3 * x[0] + 0.5 * x[1] - 0.4 * x[2] + 0.7 * x[3] + 0.2);
    return Vec4{0.3 * c, 0.5 * c, -0.4 * c, 0.7 * c};
  };
  std::mt19937 rng(2024);
  std::vector<MetricFamily> fams;
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u"));
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u+0.5u^2"));
  fams.push_back(MetricFamily::general({random_term(rng), random_term(rng)}));

  const Vec4 x{0.3, 0.1, -0.2, 0.5};
  const double h = 1e-5;
  for (const auto& fam : fams) {
    double u = u_field(x);
    Vec4 du = du_field(x);
    Christoffel got = christoffel(fam, u, du);

    // d_mu g_{nu beta} by central differences in each coordinate direction.
    double dlow[4][4][4];
    for (int mu = 0; mu < 4; ++mu) {
      Vec4 xp = x, xm = x;
      xp[mu] += h;
      xm[mu] -= h;
      Mat4 gp = eval_lower_metric(fam, u_field(xp));
      Mat4 gm = eval_lower_metric(fam, u_field(xm));
      for (int n = 0; n < 4; ++n)
        for (int b = 0; b < 4; ++b) dlow[mu][n][b] = (gp[n][b] - gm[n][b]) / (2.0 * h);
    }
    Mat4 ginv = eval_inverse_metric(fam, u);
    for (int a = 0; a < 4; ++a)
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
          double acc = 0.0;
          for (int b = 0; b < 4; ++b)
            acc += 0.5 * ginv[a][b] * (dlow[m][n][b] + dlow[n][m][b] - dlow[b][m][n]);
          CHECK(std::fabs(got[a][m][n] - acc) <= 1e-7);
          CHECK(got[a][m][n] == got[a][n][m]);  // lower-index symmetry
        }
  }
}

TEST_CASE("lowered-metric u-derivatives match finite differences") {
  std::mt19937 rng(99);
  MetricFamily fam = MetricFamily::general({random_term(rng), random_term(rng)});
  const double u = 0.07, h = 1e-5;
  Mat4 lp = eval_lower_metric(fam, u + h);
  Mat4 lm = eval_lower_metric(fam, u - h);
  Mat4 l0 = eval_lower_metric(fam, u);
  Mat4 d1 = lower_metric_d1(fam, u);
  Mat4 d2 = lower_metric_d2(fam, u);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(std::fabs(d1[i][j] - (lp[i][j] - lm[i][j]) / (2 * h)) <= 1e-8);
      CHECK(std::fabs(d2[i][j] - (lp[i][j] - 2 * l0[i][j] + lm[i][j]) / (h * h)) <= 1e-5);
    }
}

TEST_CASE("null form G on the reference families") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Direction dir(random_unit(rng));
    CHECK(null_form_G(MetricFamily::flat(), dir) == 0.0);
    CHECK(null_form_G(MetricFamily::from_preset("isotropic:c=1+u"), dir) ==
          doctest::Approx(2.0).epsilon(1e-14));
    // Only the 00-entry of g0 contributes since omega_hat_0 = -1.
    Mat4 g0 = zero_mat();
    g0[0][0] = 1.0;
    CHECK(null_form_G(g0, dir) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("null form G is rotation invariant for isotropic families") {
  std::mt19937 rng(555);
  MetricFamily fam = MetricFamily::from_preset("isotropic:c=1+u+0.5u^2");
  Direction base(random_unit(rng));
  double g_base = null_form_G(fam, base);
  for (int trial = 0; trial < 10; ++trial) {
    auto rot = random_rotation(rng);
    Vec3 w;
    for (int i = 0; i < 3; ++i)
      w[i] = rot[i][0] * base.omega[0] + rot[i][1] * base.omega[1] + rot[i][2] * base.omega[2];
    CHECK(null_form_G(fam, Direction(w)) == doctest::Approx(g_base).epsilon(1e-13));
  }
}

TEST_CASE("g0 matches a central difference of the inverse metric at u = 0") {
  std::mt19937 rng(4242);
  std::vector<MetricFamily> fams;
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u"));
  fams.push_back(MetricFamily::from_preset("isotropic:c=1+u+0.5u^2"));
  fams.push_back(MetricFamily::general({random_term(rng)}));
  const double h = 1e-6;
  for (const auto& fam : fams) {
    Mat4 gp = eval_inverse_metric(fam, h);
    Mat4 gm = eval_inverse_metric(fam, -h);
    Mat4 g0 = fam.g0();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(std::fabs(g0[i][j] - (gp[i][j] - gm[i][j]) / (2 * h)) <= 1e-8);
  }
}

TEST_CASE("family construction rejects invalid inputs") {
  // 00-terms break the g^{00} == -1 normalization.
  Mat4 bad00 = zero_mat();
  bad00[0][0] = 0.5;
  CHECK_THROWS_AS(MetricFamily::general({bad00}), ConfigError);

  Mat4 asym = zero_mat();
  asym[0][1] = 0.2;  // [1][0] left at zero
  CHECK_THROWS_AS(MetricFamily::general({asym}), ConfigError);

  CHECK_THROWS_AS(MetricFamily::isotropic(Poly{1.5, 1.0}), ConfigError);
  CHECK_THROWS_AS(MetricFamily::from_preset("isotropic:c=2+u"), ConfigError);
  CHECK_THROWS_AS(MetricFamily::from_preset("spherical"), ConfigError);
  CHECK_THROWS_AS(MetricFamily::from_preset("isotropic:c=1+q^2"), ConfigError);

  // c crossing zero inside the validity interval degenerates the family.
  CHECK_THROWS_AS(MetricFamily::isotropic(Poly{1.0, -6.0}), ConfigError);
}

TEST_CASE("preset parser handles signed multi-term polynomials") {
  MetricFamily fam = MetricFamily::from_preset("isotropic:c=1-0.25u^2+0.125u^3");
  const Poly& c = fam.isotropic_c();
  CHECK(c.coef(0) == 1.0);
  CHECK(c.coef(1) == 0.0);
  CHECK(c.coef(2) == -0.25);
  CHECK(c.coef(3) == 0.125);
  CHECK(MetricFamily::flat().is_flat());
  CHECK_FALSE(fam.is_flat());
  CHECK(MetricFamily::flat().isotropic_c()(0.3) == 1.0);
  Mat4 g1{};
  g1[1][1] = 0.5;
  CHECK_THROWS_AS(MetricFamily::general({g1}).isotropic_c(), DomainError);
}

TEST_CASE("direction normalizes and exposes the null covector") {
  Direction d(Vec3{3.0, 0.0, 4.0});
  CHECK(d.omega[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(d.omega[2] == doctest::Approx(0.8).epsilon(1e-15));
  Vec4 w = d.omega_hat();
  CHECK(w[0] == -1.0);
  CHECK(w[1] == doctest::Approx(0.6));
  double n2 = d.omega[0] * d.omega[0] + d.omega[1] * d.omega[1] + d.omega[2] * d.omega[2];
  CHECK(std::fabs(n2 - 1.0) <= 1e-12);
  CHECK_THROWS_AS(Direction(Vec3{0, 0, 0}), DomainError);
}
