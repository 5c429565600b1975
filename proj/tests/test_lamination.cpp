#include "twoscale/errors.hpp"
#include "twoscale/lamination.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace twoscale;

namespace {

const IsotropicMaterial kMat{1.0, 1.0};

std::shared_ptr<Discretization> make(const Scenario& sc, int level) {
  return std::make_shared<Discretization>(QuadMesh::build(sc, level), sc);
}

}  // namespace

TEST(StressEigen, ReconstructionOnRandomMatrices) {
  std::mt19937 rng(11);
  std::normal_distribution<double> N;
  for (int i = 0; i < 10000; ++i) {
    const Sym2 s{N(rng), N(rng), N(rng)};
    const StressEigen e = StressEigen::of(s);
    EXPECT_GE(std::abs(e.l1), std::abs(e.l2));
    EXPECT_GE(e.alpha, 0.0);
    EXPECT_LT(e.alpha, std::numbers::pi);
    ASSERT_LT((e.reconstruct() - s).norm(), 1e-12 * s.norm());
  }
}

TEST(StressEigen, HydrostaticTie) {
  const StressEigen e = StressEigen::of(Sym2{2.0, 2.0, 0.0});
  EXPECT_EQ(e.alpha, 0.0);
  EXPECT_EQ(e.l1, 2.0);
  EXPECT_EQ(e.l2, 2.0);
  const auto p = laminate_params(Sym2{1, 1, 0}, 1.0, kMat);
  EXPECT_DOUBLE_EQ(p.m, 0.5);
  EXPECT_EQ(p.alpha, 0.0);
}

TEST(LaminateParams, Examples) {
  EXPECT_NEAR(laminate_params(StressEigen{0.3, 2.0, 1.0}, 1e3, kMat).m, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(laminate_params(StressEigen{0.3, -2.0, 1.0}, 1e3, kMat).m, 1.0 / 3.0, 1e-15);
  // kappa = 2: theta = min(1, sqrt(3 / (8 l)) (|l1| + |l2|))
  const double l = 50.0;
  EXPECT_NEAR(laminate_params(StressEigen{0, 2.0, 1.0}, l, kMat).theta, std::sqrt(3.0 / (8.0 * l)) * 3.0, 1e-14);
  EXPECT_EQ(laminate_params(StressEigen{0, 2.0, 1.0}, 1e-3, kMat).theta, 1.0);
  const auto z = laminate_params(Sym2{}, 1.0, kMat);
  EXPECT_EQ(z.m, 0.0);
  EXPECT_EQ(z.theta, 0.0);
  EXPECT_THROW(laminate_params(Sym2{1, 0, 0}, 0.0, kMat), std::invalid_argument);
}

TEST(LaminateTensor, FullDensityIsHardMaterial) {
  for (double m : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const auto c = laminate_tensor_bare(m, 1.0, kMat);
    EXPECT_NEAR(c.c1111, 3.0, 1e-14);
    EXPECT_NEAR(c.c2222, 3.0, 1e-14);
    EXPECT_NEAR(c.c1122, 1.0, 1e-14);
    EXPECT_EQ(c.c1212, 0.0);
  }
}

TEST(LaminateTensor, ZeroDensityAndRankOne) {
  const double e = laminate_regularization(kMat);
  const auto z = laminate_tensor(0.7, 0.3, 0.0, kMat);
  EXPECT_LT((z - ElasticTensor2D::identity() * e).max_abs(), 1e-15);
  const auto r1 = laminate_tensor_bare(0.0, 0.5, kMat);
  EXPECT_EQ(r1.c2222, 0.0);
  EXPECT_EQ(r1.c1122, 0.0);
  // single lamination: 4 kappa mu theta / (kappa + mu)
  EXPECT_NEAR(r1.c1111, 4.0 * 2.0 * 1.0 * 0.5 / 3.0, 1e-14);
  EXPECT_THROW(laminate_tensor(0.0, 1.2, 0.5, kMat), std::invalid_argument);
}

TEST(LaminateTensor, PositiveDefiniteOnGrid) {
  const IsotropicMaterial mat{0.7, 1.3};
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int k = 0; k < 20; ++k) {
        const double alpha = std::numbers::pi * i / 20.0, m = j / 19.0, theta = k / 19.0;
        const auto c = laminate_tensor(alpha, m, theta, mat);
        const auto d = c.voigt();
        ASSERT_LT((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-14);
        ASSERT_GT(c.min_eigenvalue(), 0.0) << alpha << ' ' << m << ' ' << theta;
        ASSERT_TRUE(c.voigt().allFinite());
      }
}

TEST(LaminateTensor, StressedDirectionStiffest) {
  // optimal laminate carries the stress in its eigenframe: the stiffness along the dominant
  // eigenvector is the largest
  const auto c = laminate_from_stress(0.4, 3.0, 1.0, 10.0, kMat);
  const Vec2 d(std::cos(0.4), std::sin(0.4)), o(-std::sin(0.4), std::cos(0.4));
  const Sym2 dd = Sym2::from_matrix(d * d.transpose()), oo = Sym2::from_matrix(o * o.transpose());
  EXPECT_GT(c.energy(dd), c.energy(oo));
}

TEST(Newton, RoundTrip) {
  const double l = 5.0;
  for (const auto& [alpha, l1, l2] : {std::tuple{0.3, 1.0, 0.4}, std::tuple{1.2, -0.8, 0.5}, std::tuple{2.5, 0.6, -0.1},
                                     std::tuple{0.0, 2.0, 1.5}}) {
    for (double s : {0.5, 1.0, 2.0}) {
      const double L1 = s * l1, L2 = s * l2;
      const Sym2 sigma = StressEigen{alpha, L1, L2}.reconstruct();
      const auto c = laminate_from_stress(alpha, L1, L2, l, kMat);
      const Eigen::Vector3d ev = c.voigt().ldlt().solve(Eigen::Vector3d(sigma.xx, sigma.yy, sigma.xy));
      const Sym2 eps{ev(0), ev(1), 0.5 * ev(2)};
      // start near the unclamped branch; a clamped root may coexist
      const auto r = newton_invert(eps, l, kMat, StressEigen{alpha + 0.05, 1.1 * L1, 0.9 * L2});
      EXPECT_TRUE(r.converged) << alpha << ' ' << s << " residual " << r.residual;
      const Sym2 got = StressEigen{r.alpha, r.l1, r.l2}.reconstruct();
      EXPECT_LT((got - sigma).norm(), 1e-6 * sigma.norm()) << alpha << ' ' << s;
      EXPECT_LT((r.tensor - c).max_abs(), 1e-6 * c.max_abs()) << alpha << ' ' << s;
      EXPECT_LT((r.tensor.apply(eps) - got).norm(), 1e-8 * sigma.norm());
    }
  }
}

TEST(Newton, ClampedRootCoexists) {
  // when A eps already gives full density, A eps is itself a root
  const Sym2 eps{0.9, 0.7, 0.0};
  const auto r = newton_invert(eps, 5.0, kMat);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(laminate_params(StressEigen{r.alpha, r.l1, r.l2}, 5.0, kMat).theta, 1.0);
  const auto s = newton_invert(eps, 5.0, kMat, StressEigen{0.0, 1.0, 0.75});
  ASSERT_TRUE(s.converged);
  EXPECT_LT(laminate_params(StressEigen{s.alpha, s.l1, s.l2}, 5.0, kMat).theta, 1.0);
}

TEST(Newton, AxisAlignedStrain) {
  const auto r = newton_invert(Sym2{0.02, 0.005, 0.0}, 5.0, kMat);
  ASSERT_TRUE(r.converged);
  const double a = std::fmod(std::abs(r.alpha), std::numbers::pi / 2.0);
  EXPECT_TRUE(a < 1e-6 || std::numbers::pi / 2.0 - a < 1e-6) << r.alpha;
  EXPECT_THROW(newton_invert(Sym2{}, 1.0, kMat), std::invalid_argument);
}

TEST(VolumeMultiplier, HitsTarget) {
  std::mt19937 rng(2);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.1, 1.0);
  std::vector<Sym2> s(200);
  std::vector<double> a(200);
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double mag = std::exp(3.0 * N(rng));
    s[i] = Sym2{N(rng), N(rng), N(rng)} * mag;
    a[i] = U(rng);
    total += a[i];
  }
  for (double frac : {0.05, 0.4, 0.9, 0.999}) {
    const double target = frac * total;
    const double l = volume_multiplier(s, a, target, kMat);
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += a[i] * laminate_params(s[i], l, kMat).theta;
    EXPECT_LT(std::abs(v - target), 1e-6 * target) << frac;
  }
  s[0] = Sym2{};
  try {
    volume_multiplier(s, a, total, kMat);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_NEAR(e.residual(), total - a[0], 1e-12);
  }
}

TEST(Alternating, VolumeAndMonotoneCompliance) {
  auto d = make(Scenario::carrier(), 3);
  const auto& mat = d->scenario().material;
  TensorField c(d->num_elements(), ElasticTensor2D::isotropic(mat) * d->scenario().volume_fraction);
  const auto u = assemble_and_solve(d, c);
  const auto r = alternating_optimize(d, c, u, 40);
  const double target = d->scenario().volume_fraction * d->scenario().area();
  for (double v : r.volume) EXPECT_LT(std::abs(v - target), 1e-6 * target);
  int violations = 0;
  for (std::size_t i = 3; i < r.compliance.size(); ++i)
    if (r.compliance[i] > r.compliance[i - 1] * (1.0 + 1e-8)) ++violations;
  RecordProperty("monotonicity_violations", violations);
  EXPECT_LT(r.compliance.back(), r.compliance[3]);
  // error against a long run decays with the number of rounds
  const auto ref = alternating_optimize(d, r.tensors, r.u, 300);
  const double jinf = ref.compliance.back();
  EXPECT_LT(std::abs(r.compliance[39] - jinf), std::abs(r.compliance[9] - jinf));
  EXPECT_LT(std::abs(r.compliance[9] - jinf), std::abs(r.compliance[1] - jinf));
}

TEST(Alternating, FixedPointUnderUniformStress) {
  // uniaxial tension on rollers: uniform stress, the first laminate is already stationary
  Scenario sc = Scenario::carrier();
  sc.name = "tension";
  sc.dirichlet = {{{Vec2(0, 0), Vec2(1, 0)}, false, true, Vec2::Zero()},
                  {{Vec2(0, 0), Vec2(0, 1)}, true, false, Vec2::Zero()}};
  sc.loads = {{{Vec2(1, 0), Vec2(1, 1)}, Vec2(1.0, 0.0)}};
  auto d = make(sc, 2);
  TensorField c(d->num_elements(), ElasticTensor2D::isotropic(sc.material));
  const auto r = alternating_optimize(d, c, assemble_and_solve(d, c), 4);
  for (std::size_t i = 1; i < r.compliance.size(); ++i)
    EXPECT_LE(std::abs(r.compliance[i] - r.compliance[i - 1]), 1e-8 * r.compliance[i]);
  for (const auto& p : r.params) {
    EXPECT_NEAR(p.theta, sc.volume_fraction, 1e-9);
    EXPECT_NEAR(p.m, 0.0, 1e-9);
  }
  // rank-one laminate along x: compliance 1 / (4 kappa mu theta / (kappa + mu) + reg)
  const double c11 = 4.0 * 2.0 * 1.0 * sc.volume_fraction / 3.0 + laminate_regularization(sc.material);
  EXPECT_NEAR(r.compliance.back(), 1.0 / c11, 1e-9);
}

TEST(StressRoots, RecoverStressOfUnregularizedLaminate) {
  std::mt19937 rng(8);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.0, std::numbers::pi);
  const IsotropicMaterial mat{0.7, 1.3};
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const StressEigen s = StressEigen::of(StressEigen{U(rng), N(rng), N(rng)}.reconstruct());
    const double l = std::exp(2.0 * N(rng));
    const auto p = laminate_params(s, l, mat);
    if (p.theta >= 1.0 || p.m <= 0.0 || p.m >= 1.0) continue;
    // strain of the bare laminate in its eigenframe, from the normal block
    const auto c = laminate_tensor_bare(p.m, p.theta, mat);
    Mat2 block;
    block << c.c1111, c.c1122, c.c1122, c.c2222;
    const Eigen::Vector2d e = block.lu().solve(Eigen::Vector2d(s.l1, s.l2));
    const Mat2 R = rotation(s.alpha);
    const Sym2 eps = Sym2::from_matrix(R * e.asDiagonal() * R.transpose());
    const auto roots = laminate_stress_roots(eps, l, mat);
    double best = INFINITY;
    for (const auto& r : roots) best = std::min(best, (r.reconstruct() - s.reconstruct()).norm());
    ASSERT_LT(best, 1e-9 * s.reconstruct().norm()) << i;
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(StressRoots, ClampedBranchAndNewtonPolish) {
  const Sym2 eps{0.9, 0.7, 0.0};
  const auto roots = laminate_stress_roots(eps, 5.0, kMat);
  bool clamped = false;
  for (const auto& r : roots) {
    if (laminate_params(r, 5.0, kMat).theta == 1.0) {
      clamped = true;
      EXPECT_LT((r.reconstruct() - ElasticTensor2D::isotropic(kMat).apply(eps)).norm(), 1e-12);
    }
    EXPECT_TRUE(newton_invert(eps, 5.0, kMat, r).converged);
  }
  EXPECT_TRUE(clamped);
  EXPECT_THROW(laminate_stress_roots(eps, 0.0, kMat), std::invalid_argument);
}
