#include "twoscale/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace twoscale {

namespace {

using Full = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

Full expand(const ElasticTensor2D& c) {
  Full f{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) f[i][j][k][l] = c(i, j, k, l);
  return f;
}

ElasticTensor2D compress(const Full& f) {
  return {f[0][0][0][0], f[1][1][1][1], f[0][0][1][1], f[0][1][0][1], f[0][0][0][1], f[1][1][0][1]};
}

// Sum over Q_mi Q_nj Q_ok Q_pl C_ijkl where slot `deriv` (0..3) uses dQ instead of Q; -1 for none.
Full transform(const Full& c, const Mat2& q, const Mat2& dq, int deriv) {
  auto pick = [&](int slot) -> const Mat2& { return slot == deriv ? dq : q; };
  Full out{};
  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n)
      for (int o = 0; o < 2; ++o)
        for (int p = 0; p < 2; ++p) {
          double s = 0.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                  s += pick(0)(m, i) * pick(1)(n, j) * pick(2)(o, k) * pick(3)(p, l) * c[i][j][k][l];
          out[m][n][o][p] = s;
        }
  return out;
}

}  // namespace

double Sym2::norm() const { return std::sqrt(dot(*this)); }

Mat2 rotation(double alpha) {
  Mat2 q;
  const double c = std::cos(alpha), s = std::sin(alpha);
  q << c, -s, s, c;
  return q;
}

ElasticTensor2D ElasticTensor2D::isotropic(const IsotropicMaterial& m) {
  return {m.lambda + 2.0 * m.mu, m.lambda + 2.0 * m.mu, m.lambda, m.mu, 0.0, 0.0};
}

ElasticTensor2D ElasticTensor2D::from_voigt(const Eigen::Matrix3d& d) {
  return {d(0, 0), d(1, 1), 0.5 * (d(0, 1) + d(1, 0)), d(2, 2), 0.5 * (d(0, 2) + d(2, 0)),
          0.5 * (d(1, 2) + d(2, 1))};
}

double ElasticTensor2D::operator()(int i, int j, int k, int l) const {
  // Map index pair to Voigt slot: (0,0)->0, (1,1)->1, mixed->2.
  auto slot = [](int a, int b) { return a == b ? a : 2; };
  const int p = slot(i, j), q = slot(k, l);
  const int lo = std::min(p, q), hi = std::max(p, q);
  if (lo == 0 && hi == 0) return c1111;
  if (lo == 1 && hi == 1) return c2222;
  if (lo == 0 && hi == 1) return c1122;
  if (lo == 2) return c1212;
  if (lo == 0) return c1112;
  return c2212;
}

Eigen::Matrix3d ElasticTensor2D::voigt() const {
  Eigen::Matrix3d d;
  d << c1111, c1122, c1112, c1122, c2222, c2212, c1112, c2212, c1212;
  return d;
}

Eigen::Matrix3d ElasticTensor2D::mandel() const {
  const double r2 = std::sqrt(2.0);
  Eigen::Matrix3d d;
  d << c1111, c1122, r2 * c1112, c1122, c2222, r2 * c2212, r2 * c1112, r2 * c2212, 2.0 * c1212;
  return d;
}

Sym2 ElasticTensor2D::apply(const Sym2& e) const {
  const Eigen::Vector3d s = voigt() * e.voigt();
  return {s(0), s(1), s(2)};
}

ElasticTensor2D ElasticTensor2D::rotated(double alpha) const {
  const Mat2 q = rotation(alpha);
  return compress(transform(expand(*this), q, q, -1));
}

ElasticTensor2D ElasticTensor2D::rotation_derivative(double alpha) const {
  const Mat2 q = rotation(alpha);
  Mat2 dq;
  dq << -std::sin(alpha), -std::cos(alpha), std::cos(alpha), -std::sin(alpha);
  const Full c = expand(*this);
  ElasticTensor2D out;
  for (int slot = 0; slot < 4; ++slot) out += compress(transform(c, q, dq, slot));
  return out;
}

double ElasticTensor2D::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(mandel(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double ElasticTensor2D::max_abs() const {
  double m = 0.0;
  for (double v : entries()) m = std::max(m, std::abs(v));
  return m;
}

ElasticTensor2D ElasticTensor2D::operator+(const ElasticTensor2D& o) const {
  return {c1111 + o.c1111, c2222 + o.c2222, c1122 + o.c1122,
          c1212 + o.c1212, c1112 + o.c1112, c2212 + o.c2212};
}

ElasticTensor2D ElasticTensor2D::operator-(const ElasticTensor2D& o) const { return *this + o * -1.0; }

ElasticTensor2D ElasticTensor2D::operator*(double s) const {
  return {c1111 * s, c2222 * s, c1122 * s, c1212 * s, c1112 * s, c2212 * s};
}

ElasticTensor2D& ElasticTensor2D::operator+=(const ElasticTensor2D& o) {
  *this = *this + o;
  return *this;
}

std::ostream& operator<<(std::ostream& os, const ElasticTensor2D& c) {
  return os << "[C1111=" << c.c1111 << " C2222=" << c.c2222 << " C1122=" << c.c1122
            << " C1212=" << c.c1212 << " C1112=" << c.c1112 << " C2212=" << c.c2212 << "]";
}

}  // namespace twoscale
