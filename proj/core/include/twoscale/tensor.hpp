#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>

namespace twoscale {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Symmetric 2x2 tensor (strain or stress) stored by its three tensor components.
struct Sym2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  static Sym2 from_matrix(const Mat2& m) { return {m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0))}; }
  /// Symmetric part of a displacement gradient.
  static Sym2 strain_of(const Mat2& grad) { return from_matrix(grad); }

  Mat2 matrix() const {
    Mat2 m;
    m << xx, xy, xy, yy;
    return m;
  }
  /// Voigt vector with engineering shear (xx, yy, 2 xy).
  Eigen::Vector3d voigt() const { return {xx, yy, 2.0 * xy}; }
  /// Frobenius inner product a:b.
  double dot(const Sym2& o) const { return xx * o.xx + yy * o.yy + 2.0 * xy * o.xy; }
  double norm() const;

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy}; }
  Sym2 operator*(double s) const { return {xx * s, yy * s, xy * s}; }
};

inline Sym2 operator*(double s, const Sym2& a) { return a * s; }

/// Isotropic material in Lame parameters.
struct IsotropicMaterial {
  double lambda = 1.0;
  double mu = 1.0;

  double bulk() const { return lambda + mu; }
  bool admissible() const { return mu > 0.0 && lambda + mu > 0.0; }
  IsotropicMaterial scaled(double s) const { return {lambda * s, mu * s}; }
};

/// Plane elasticity tensor with full minor and major symmetry (six independent entries).
class ElasticTensor2D {
 public:
  double c1111 = 0.0;
  double c2222 = 0.0;
  double c1122 = 0.0;
  double c1212 = 0.0;
  double c1112 = 0.0;
  double c2212 = 0.0;

  ElasticTensor2D() = default;
  ElasticTensor2D(double a1111, double a2222, double a1122, double a1212, double a1112, double a2212)
      : c1111(a1111), c2222(a2222), c1122(a1122), c1212(a1212), c1112(a1112), c2212(a2212) {}

  static ElasticTensor2D isotropic(const IsotropicMaterial& m);
  static ElasticTensor2D zero() { return {}; }
  /// Identity on symmetric matrices, i.e. C xi : xi = xi : xi.
  static ElasticTensor2D identity() { return {1.0, 1.0, 0.0, 0.5, 0.0, 0.0}; }
  static ElasticTensor2D from_voigt(const Eigen::Matrix3d& d);

  /// C_ijkl with zero-based indices.
  double operator()(int i, int j, int k, int l) const;

  /// 3x3 matrix D with sigma_voigt = D * strain_voigt (engineering shear in the strain).
  Eigen::Matrix3d voigt() const;
  /// Orthonormal (Mandel) representation whose eigenvalues are those of C on Sym(2).
  Eigen::Matrix3d mandel() const;

  Sym2 apply(const Sym2& e) const;
  /// C a : b
  double energy(const Sym2& a, const Sym2& b) const { return apply(a).dot(b); }
  double energy(const Sym2& a) const { return energy(a, a); }

  /// Q_mi Q_nj Q_ok Q_pl C_ijkl with Q the rotation by alpha.
  ElasticTensor2D rotated(double alpha) const;
  /// d/d alpha of rotated(alpha).
  ElasticTensor2D rotation_derivative(double alpha) const;

  double min_eigenvalue() const;
  bool positive_definite() const { return min_eigenvalue() > 0.0; }

  /// Largest absolute entry over the six independent components.
  double max_abs() const;

  ElasticTensor2D operator+(const ElasticTensor2D& o) const;
  ElasticTensor2D operator-(const ElasticTensor2D& o) const;
  ElasticTensor2D operator*(double s) const;
  ElasticTensor2D& operator+=(const ElasticTensor2D& o);

  std::array<double, 6> entries() const { return {c1111, c2222, c1122, c1212, c1112, c2212}; }
  static ElasticTensor2D from_entries(const std::array<double, 6>& e) {
    return {e[0], e[1], e[2], e[3], e[4], e[5]};
  }
};

inline ElasticTensor2D operator*(double s, const ElasticTensor2D& c) { return c * s; }

std::ostream& operator<<(std::ostream& os, const ElasticTensor2D& c);

Mat2 rotation(double alpha);

}  // namespace twoscale
