#include "qwl/metric.hpp"

#include <Eigen/Dense>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "qwl/errors.hpp"

namespace qwl {

namespace {

constexpr double kMinkowski[4] = {-1.0, 1.0, 1.0, 1.0};

Mat4 invert4(const Mat4& m) {
  Eigen::Matrix4d e;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) e(i, j) = m[i][j];
  double det = e.determinant();
  if (!(std::fabs(det) > 1e-12)) throw DomainError("metric not invertible at this u");
  Eigen::Matrix4d inv = e.inverse();
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i][j] = inv(i, j);
  return out;
}

Mat4 matmul(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      double aik = a[i][k];
      if (aik == 0.0) continue;
      for (int j = 0; j < 4; ++j) out[i][j] += aik * b[k][j];
    }
  return out;
}

Mat4 eval_poly_matrix(const Poly (&p)[4][4], double u) {
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i][j] = p[i][j](u);
  return out;
}

void check_u(const MetricFamily& fam, double u) {
  if (std::fabs(u) > fam.u_validity())
    throw DomainError("metric evaluated outside |u| <= u_validity");
}

// Parse a polynomial in u written as a sum of terms like
// "1", "u", "0.5u^2", "-0.25u^3". Whitespace-free after normalization.
Poly parse_u_poly(const std::string& expr) {
  std::string s;
  for (char ch : expr)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw ConfigError("empty polynomial expression");
  Poly p{0.0};
  std::size_t i = 0;
  while (i < s.size()) {
    double sign = 1.0;
    while (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      if (s[i] == '-') sign = -sign;
      ++i;
    }
    if (i >= s.size()) throw ConfigError("dangling sign in polynomial: " + expr);
    double coeff = 1.0;
    if (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.') {
      char* end = nullptr;
      coeff = std::strtod(s.c_str() + i, &end);
      i = static_cast<std::size_t>(end - s.c_str());
    }
    int power = 0;
    if (i < s.size() && s[i] == 'u') {
      ++i;
      power = 1;
      if (i < s.size() && s[i] == '^') {
        ++i;
        char* end = nullptr;
        long p_raw = std::strtol(s.c_str() + i, &end, 10);
        if (end == s.c_str() + i) throw ConfigError("missing exponent in: " + expr);
        i = static_cast<std::size_t>(end - s.c_str());
        power = static_cast<int>(p_raw);
      }
    }
    if (power < 0 || power > kMaxPolyDegree)
      throw ConfigError("unsupported power in polynomial: " + expr);
    if (i < s.size() && s[i] != '+' && s[i] != '-')
      throw ConfigError("cannot parse polynomial near '" + s.substr(i) + "'");
    p.set_coef(power, p.coef(power) + sign * coeff);
  }
  return p;
}

}  // namespace

Direction::Direction(const Vec3& w) {
  double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  if (!(n > 0.0)) throw DomainError("Direction: zero vector");
  omega = {w[0] / n, w[1] / n, w[2] / n};
}

void MetricFamily::finalize() {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      inv_d1_[i][j] = inv_[i][j].derivative();
      inv_d2_[i][j] = inv_d1_[i][j].derivative();
    }
  // The family must stay invertible with g^{00} < 0 across the validity
  // interval; scan it once at construction so later evals can stay cheap.
  for (int k = -64; k <= 64; ++k) {
    double u = u_validity_ * k / 64.0;
    if (kind_ == Kind::Isotropic && !(c_(u) > 0.0))
      throw ConfigError("sound speed c(u) loses positivity inside u_validity");
    Mat4 g = eval_poly_matrix(inv_, u);
    if (!(g[0][0] < 0.0))
      throw ConfigError("metric family loses g^{00} < 0 inside u_validity");
    try {
      (void)invert4(g);
    } catch (const DomainError&) {
      throw ConfigError("metric family degenerates inside u_validity");
    }
  }
}

MetricFamily MetricFamily::isotropic(const Poly& c, double u_validity) {
  if (c(0.0) != 1.0) throw ConfigError("isotropic family requires c(0) = 1");
  if (!(u_validity > 0.0)) throw ConfigError("u_validity must be positive");
  MetricFamily fam;
  fam.kind_ = Kind::Isotropic;
  fam.u_validity_ = u_validity;
  fam.c_ = c;
  Poly c2 = c * c;
  fam.inv_[0][0] = Poly{-1.0};
  for (int i = 1; i < 4; ++i) fam.inv_[i][i] = c2;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) fam.inv_[i][j] = Poly{0.0};
  fam.finalize();
  return fam;
}

MetricFamily MetricFamily::flat(double u_validity) {
  return isotropic(Poly{1.0}, u_validity);
}

MetricFamily MetricFamily::general(const std::vector<Mat4>& g_terms, double u_validity) {
  if (!(u_validity > 0.0)) throw ConfigError("u_validity must be positive");
  if (g_terms.size() > static_cast<std::size_t>(kMaxPolyDegree))
    throw ConfigError("too many polynomial terms in metric family");
  MetricFamily fam;
  fam.kind_ = Kind::GeneralPolynomial;
  fam.u_validity_ = u_validity;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      fam.inv_[i][j] = Poly{0.0};
      if (i == j) fam.inv_[i][j].set_coef(0, kMinkowski[i]);
    }
  for (std::size_t k = 0; k < g_terms.size(); ++k) {
    const Mat4& gk = g_terms[k];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (gk[i][j] != gk[j][i])
          throw ConfigError("metric term is not symmetric");
    if (gk[0][0] != 0.0)
      throw ConfigError("metric family must keep g^{00} = -1 (00-terms rejected)");
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        fam.inv_[i][j].set_coef(static_cast<int>(k) + 1, gk[i][j]);
  }
  fam.finalize();
  return fam;
}

MetricFamily MetricFamily::from_preset(const std::string& name, double u_validity) {
  if (name == "flat") return flat(u_validity);
  const std::string prefix = "isotropic:c=";
  if (name.rfind(prefix, 0) == 0)
    return isotropic(parse_u_poly(name.substr(prefix.size())), u_validity);
  throw ConfigError("unknown metric preset: " + name);
}

bool MetricFamily::is_flat() const {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (!inv_d1_[i][j].is_zero()) return false;
  return true;
}

const Poly& MetricFamily::isotropic_c() const {
  if (kind_ != Kind::Isotropic)
    throw DomainError("sound speed only defined for isotropic families");
  return c_;
}

Mat4 MetricFamily::g0() const {
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i][j] = inv_d1_[i][j](0.0);
  return out;
}

Mat4 eval_inverse_metric(const MetricFamily& fam, double u) {
  check_u(fam, u);
  return eval_poly_matrix(fam.inv_, u);
}

Mat4 inverse_metric_d1(const MetricFamily& fam, double u) {
  check_u(fam, u);
  return eval_poly_matrix(fam.inv_d1_, u);
}

Mat4 inverse_metric_d2(const MetricFamily& fam, double u) {
  check_u(fam, u);
  return eval_poly_matrix(fam.inv_d2_, u);
}

Mat4 eval_lower_metric(const MetricFamily& fam, double u) {
  return invert4(eval_inverse_metric(fam, u));
}

Mat4 lower_metric_d1(const MetricFamily& fam, double u) {
  // d/du of the inverse: -g_low (d/du g^{..}) g_low.
  Mat4 low = eval_lower_metric(fam, u);
  Mat4 d1 = inverse_metric_d1(fam, u);
  Mat4 out = matmul(matmul(low, d1), low);
  for (auto& row : out)
    for (double& v : row) v = -v;
  return out;
}

Mat4 lower_metric_d2(const MetricFamily& fam, double u) {
  Mat4 low = eval_lower_metric(fam, u);
  Mat4 low1 = lower_metric_d1(fam, u);
  Mat4 d1 = inverse_metric_d1(fam, u);
  Mat4 d2 = inverse_metric_d2(fam, u);
  Mat4 a = matmul(matmul(low1, d1), low);
  Mat4 b = matmul(matmul(low, d2), low);
  Mat4 c = matmul(matmul(low, d1), low1);
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i][j] = -(a[i][j] + b[i][j] + c[i][j]);
  return out;
}

Christoffel christoffel(const MetricFamily& fam, double u, const Vec4& du) {
  Mat4 ginv = eval_inverse_metric(fam, u);
  Mat4 low1 = lower_metric_d1(fam, u);
  Christoffel out{};
  for (int m = 0; m < 4; ++m)
    for (int n = m; n < 4; ++n) {
      // bracket_b = d_m g_{nb} + d_n g_{mb} - d_b g_{mn}
      for (int a = 0; a < 4; ++a) {
        double acc = 0.0;
        for (int b = 0; b < 4; ++b) {
          double bracket = low1[n][b] * du[m] + low1[m][b] * du[n] - low1[m][n] * du[b];
          acc += ginv[a][b] * bracket;
        }
        out[a][m][n] = 0.5 * acc;
        out[a][n][m] = out[a][m][n];
      }
    }
  return out;
}

double null_form_G(const Mat4& g0, const Direction& dir) {
  Vec4 w = dir.omega_hat();
  double acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) acc += g0[a][b] * w[a] * w[b];
  return acc;
}

double null_form_G(const MetricFamily& fam, const Direction& dir) {
  return null_form_G(fam.g0(), dir);
}

}  // namespace qwl
