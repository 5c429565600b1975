#include "twoscale/tensor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace twoscale;

namespace {

ElasticTensor2D random_tensor(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = u(rng);
  return ElasticTensor2D::from_voigt(m * m.transpose() + 0.1 * Eigen::Matrix3d::Identity());
}

double diff(const ElasticTensor2D& a, const ElasticTensor2D& b) { return (a - b).max_abs(); }

}  // namespace

TEST(Tensor, IsotropicEntries) {
  const auto c = ElasticTensor2D::isotropic({1.0, 1.0});
  EXPECT_DOUBLE_EQ(c.c1111, 3.0);
  EXPECT_DOUBLE_EQ(c.c2222, 3.0);
  EXPECT_DOUBLE_EQ(c.c1122, 1.0);
  EXPECT_DOUBLE_EQ(c.c1212, 1.0);
  EXPECT_DOUBLE_EQ(c(0, 1, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(c(1, 0, 0, 1), 1.0);
}

TEST(Tensor, FullIndexSymmetries) {
  std::mt19937 rng(1);
  const auto c = random_tensor(rng);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          EXPECT_EQ(c(i, j, k, l), c(j, i, k, l));
          EXPECT_EQ(c(i, j, k, l), c(i, j, l, k));
          EXPECT_EQ(c(i, j, k, l), c(k, l, i, j));
        }
}

TEST(Tensor, ApplyMatchesIndexForm) {
  std::mt19937 rng(2);
  const auto c = random_tensor(rng);
  const Sym2 e{0.3, -0.7, 0.45};
  const Mat2 em = e.matrix();
  const Sym2 s = c.apply(e);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double v = 0;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) v += c(i, j, k, l) * em(k, l);
      EXPECT_NEAR(s.matrix()(i, j), v, 1e-14);
    }
  EXPECT_NEAR(c.energy(e), e.voigt().dot(c.voigt() * e.voigt()), 1e-14);
}

TEST(Tensor, RotationMatchesIndexForm) {
  std::mt19937 rng(3);
  const auto c = random_tensor(rng);
  const double a = 0.83;
  const Mat2 q = rotation(a);
  const auto r = c.rotated(a);
  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n)
      for (int o = 0; o < 2; ++o)
        for (int p = 0; p < 2; ++p) {
          double v = 0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) v += q(m, i) * q(n, j) * q(o, k) * q(p, l) * c(i, j, k, l);
          EXPECT_NEAR(r(m, n, o, p), v, 1e-13);
        }
}

TEST(Tensor, RotationGroupAndInvariants) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int t = 0; t < 50; ++t) {
    const auto c = random_tensor(rng);
    const double a = u(rng), b = u(rng);
    EXPECT_LT(diff(c.rotated(a).rotated(b), c.rotated(a + b)), 1e-12);
    EXPECT_LT(diff(c.rotated(a).rotated(-a), c), 1e-12);
    EXPECT_LT(diff(c.rotated(a + M_PI), c.rotated(a)), 1e-12);
    EXPECT_NEAR(c.rotated(a).min_eigenvalue(), c.min_eigenvalue(), 1e-12);
    EXPECT_TRUE(c.rotated(a).positive_definite());
  }
  const auto iso = ElasticTensor2D::isotropic({0.7, 1.3});
  EXPECT_LT(diff(iso.rotated(0.4), iso), 1e-14);
}

TEST(Tensor, QuarterTurnSwapsAxes) {
  const ElasticTensor2D c{5, 2, 1, 0.7, 0, 0};
  const auto r = c.rotated(M_PI / 2);
  EXPECT_NEAR(r.c1111, 2, 1e-14);
  EXPECT_NEAR(r.c2222, 5, 1e-14);
  EXPECT_NEAR(r.c1122, 1, 1e-14);
  EXPECT_NEAR(r.c1212, 0.7, 1e-14);
}

TEST(Tensor, RotationDerivativeMatchesDifferenceQuotient) {
  std::mt19937 rng(5);
  const auto c = random_tensor(rng);
  for (double a : {0.0, 0.3, 1.9}) {
    const double h = 1e-5;
    const auto fd = (c.rotated(a + h) - c.rotated(a - h)) * (0.5 / h);
    EXPECT_LT(diff(c.rotation_derivative(a), fd), 1e-8);
  }
}

TEST(Tensor, MandelEigenvalues) {
  EXPECT_NEAR(ElasticTensor2D::identity().min_eigenvalue(), 1.0, 1e-15);
  // Isotropic: 2(lambda+mu) on the hydrostatic mode, 2 mu on deviators.
  EXPECT_NEAR(ElasticTensor2D::isotropic({1.0, 1.0}).min_eigenvalue(), 2.0, 1e-14);
  EXPECT_NEAR(ElasticTensor2D::isotropic({3.0, 0.5}).min_eigenvalue(), 1.0, 1e-14);
  EXPECT_FALSE(ElasticTensor2D::zero().positive_definite());
}
