#include "twoscale/errors.hpp"
#include "twoscale/fem.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace twoscale;

namespace {

std::shared_ptr<const Discretization> make_disc(const Scenario& sc, int level, int extra_rounds = 0) {
  auto mesh = QuadMesh::build(sc, level);
  for (int r = 0; r < extra_rounds; ++r) {
    // Refine the leaf at a fixed interior point to create hanging nodes.
    const int id = mesh.locate(Vec2(0.3 + 0.01 * r, 0.2 + 0.01 * r));
    mesh = mesh.refined(std::vector<int>{id});
  }
  return std::make_shared<Discretization>(std::move(mesh), sc);
}

TensorField uniform(const Discretization& d, const ElasticTensor2D& c) { return TensorField(d.num_elements(), c); }

TensorField random_field(const Discretization& d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  TensorField f;
  for (std::size_t e = 0; e < d.num_elements(); ++e) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = u(rng);
    f.push_back(ElasticTensor2D::from_voigt(m * m.transpose() + 0.2 * Eigen::Matrix3d::Identity()));
  }
  return f;
}

// Uniaxial compression of the unit square on rollers: exact field is linear.
Scenario uniaxial(double t) {
  Scenario s = Scenario::carrier();
  s.name = "uniaxial";
  s.dirichlet = {{{Vec2(0, 0), Vec2(1, 0)}, false, true, Vec2::Zero()},
                 {{Vec2(0, 0), Vec2(0, 0)}, true, false, Vec2::Zero()}};
  s.loads = {{{Vec2(0, 1), Vec2(1, 1)}, Vec2(0, -t)}};
  return s;
}

// Independent energy quadrature through field strains.
double energy_by_points(const TensorField& c, const DisplacementField& u, const DisplacementField& v) {
  const auto& d = u.discretization();
  double s = 0;
  for (std::size_t e = 0; e < d.num_elements(); ++e)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double xi = Gauss3::points[a], eta = Gauss3::points[b];
        s += Gauss3::weights[a] * Gauss3::weights[b] * d.element(e).area() *
             c[e].energy(u.strain(e, xi, eta), v.strain(e, xi, eta));
      }
  return s;
}

}  // namespace

TEST(Q2Basis, PartitionOfUnityAndNodality) {
  const double pts[3] = {0, 0.5, 1};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      const auto v = q2::values(pts[i], pts[j]);
      for (int n = 0; n < 9; ++n) EXPECT_NEAR(v[n], n == 3 * j + i ? 1.0 : 0.0, 1e-15);
    }
  const auto v = q2::values(0.3, 0.8);
  const auto g = q2::gradients(0.3, 0.8);
  double s = 0;
  Vec2 gs = Vec2::Zero();
  for (int n = 0; n < 9; ++n) s += v[n], gs += g[n];
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_NEAR(gs.norm(), 0.0, 1e-14);
}

TEST(Q2Basis, DerivativesMatchDifferenceQuotients) {
  const double x = 0.37, y = 0.61, h = 1e-6;
  const auto g = q2::gradients(x, y);
  const auto hs = q2::hessians(x, y);
  const auto gx = q2::gradients(x + h, y), gxm = q2::gradients(x - h, y);
  const auto vx = q2::values(x + h, y), vxm = q2::values(x - h, y);
  const auto vy = q2::values(x, y + h), vym = q2::values(x, y - h);
  for (int n = 0; n < 9; ++n) {
    EXPECT_NEAR(g[n].x(), (vx[n] - vxm[n]) / (2 * h), 1e-8);
    EXPECT_NEAR(g[n].y(), (vy[n] - vym[n]) / (2 * h), 1e-8);
    EXPECT_NEAR(hs[n](0), (gx[n].x() - gxm[n].x()) / (2 * h), 1e-7);
    EXPECT_NEAR(hs[n](2), (gx[n].y() - gxm[n].y()) / (2 * h), 1e-7);
  }
}

TEST(Fem, UniaxialPatchTest) {
  const IsotropicMaterial mat{1.0, 1.0};
  const double t = 0.7;
  const double exx = mat.lambda * t / (4 * mat.mu * (mat.lambda + mat.mu));
  const double eyy = -t * (mat.lambda + 2 * mat.mu) / (4 * mat.mu * (mat.lambda + mat.mu));
  for (int rounds : {0, 2}) {
    auto d = make_disc(uniaxial(t), 1, rounds);
    if (rounds > 0) {
      ASSERT_FALSE(d->mesh().hanging_constraints().empty());
    }
    const auto c = uniform(*d, ElasticTensor2D::isotropic(mat));
    const auto u = assemble_and_solve(d, c);
    for (const Vec2& p : {Vec2(0.1, 0.9), Vec2(0.77, 0.33), Vec2(1, 1), Vec2(0.31, 0.21)}) {
      const Vec2 v = u.value_at(p);
      EXPECT_NEAR(v.x(), exx * p.x(), 1e-12);
      EXPECT_NEAR(v.y(), eyy * p.y(), 1e-12);
    }
    // Neumann and free edges carry no jump, interior edges neither.
    for (std::size_t e = 0; e < d->num_elements(); ++e)
      for (int s = 0; s < 4; ++s)
        for (double q : {0.2, 0.7}) EXPECT_LT(edge_jump(u, c, e, static_cast<Side>(s), q).norm(), 1e-11);
  }
}

TEST(Fem, RigidTranslationHasZeroEnergy) {
  Scenario s = Scenario::carrier();
  const Vec2 shift(0.3, -0.2);
  s.dirichlet.clear();
  for (const auto& [a, b] : {std::pair{Vec2(0, 0), Vec2(1, 0)}, {Vec2(1, 0), Vec2(1, 1)},
                              {Vec2(1, 1), Vec2(0, 1)}, {Vec2(0, 1), Vec2(0, 0)}})
    s.dirichlet.push_back({{a, b}, true, true, shift});
  s.loads.clear();
  auto d = make_disc(s, 2, 1);
  const auto c = uniform(*d, ElasticTensor2D::isotropic({1, 1}));
  const auto u = assemble_and_solve(d, c);
  EXPECT_LT(energy_by_points(c, u, u), 1e-24);
  // Assembled form: roundoff relative to |K| |u|^2.
  EXPECT_LT(std::abs(bilinear(c, u, u)), 1e-12);
  EXPECT_NEAR((u.value_at(Vec2(0.4, 0.6)) - shift).norm(), 0.0, 1e-13);
  EXPECT_EQ(compliance(u), 0.0);
}

TEST(Fem, ZeroLoadGivesZeroField) {
  Scenario s = Scenario::carrier();
  s.loads.clear();
  auto d = make_disc(s, 2);
  const auto u = assemble_and_solve(d, uniform(*d, ElasticTensor2D::isotropic({1, 1})));
  EXPECT_EQ(u.nodal().norm(), 0.0);
  EXPECT_EQ(compliance(u), 0.0);
}

TEST(Fem, GalerkinIdentityAndOrthogonality) {
  std::mt19937 rng(11);
  for (const auto& sc : {Scenario::carrier(), Scenario::cantilever(), Scenario::lshape(), Scenario::bridge()}) {
    auto d = make_disc(sc, sc.root_level() + 2, 2);
    const auto c = random_field(*d, rng);
    SolveReport rep;
    const auto u = assemble_and_solve(d, c, &rep);
    EXPECT_LE(rep.relative_residual, 1e-10);
    const double l = compliance(u);
    EXPECT_GT(l, 0.0) << sc.name;
    EXPECT_LE(std::abs(l - bilinear(c, u, u)), 1e-10 * std::abs(l)) << sc.name;
    EXPECT_NEAR(energy_by_points(c, u, u), l, 1e-10 * l);
    EXPECT_LT(u.constraint_violation(), 1e-14);
    // a(u, phi_i) = l(phi_i) for constrained basis functions, energy evaluated independently.
    const int n = d->num_dofs();
    double worst = 0;
    for (int i = 0; i < n; i += std::max(1, n / 25)) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      x(i) = 1;
      const auto phi = DisplacementField::from_dofs(d, x);
      worst = std::max(worst, std::abs(energy_by_points(c, u, phi) - compliance(phi)));
    }
    EXPECT_LT(worst, 1e-10 * std::max(1.0, l)) << sc.name;
  }
}

TEST(Fem, StiffnessSymmetricPositiveDefinite) {
  std::mt19937 rng(5);
  auto d = make_disc(Scenario::carrier(), 2, 2);
  const auto sys = assemble(*d, random_field(*d, rng));
  const Eigen::SparseMatrix<double> kt = sys.matrix.transpose();
  EXPECT_LT((sys.matrix - kt).norm(), 1e-13 * sys.matrix.norm());
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(sys.matrix.rows());
    for (auto& v : x) v = g(rng);
    EXPECT_GT(x.dot(sys.matrix * x), 0.0);
  }
}

TEST(Fem, HangingNodesKeepFieldContinuous) {
  std::mt19937 rng(9);
  auto d = make_disc(Scenario::carrier(), 2, 3);
  const auto u = assemble_and_solve(d, random_field(*d, rng));
  const auto& mesh = d->mesh();
  for (std::size_t e = 0; e < d->num_elements(); ++e) {
    const int id = d->element_id(e);
    for (int s = 0; s < 4; ++s) {
      const Neighbor nb = mesh.neighbor(id, static_cast<Side>(s));
      if (nb.kind != Neighbor::Kind::coarser) continue;
      const auto [p0, p1] = mesh.side_points(id, static_cast<Side>(s));
      const auto other = static_cast<std::size_t>(mesh.leaf_index(nb.leaves[0]));
      for (double q : {0.1, 0.5, 0.83}) {
        const Vec2 p = p0 + q * (p1 - p0);
        const Vec2 a = d->local(e, p), b = d->local(other, p);
        EXPECT_LT((u.value(e, a.x(), a.y()) - u.value(other, b.x(), b.y())).norm(), 1e-13);
      }
    }
  }
}

TEST(Fem, UniformRefinementCompliance) {
  // Nested conforming spaces: the discrete compliance increases toward the exact one.
  double prev = 0;
  for (int level = 1; level <= 4; ++level) {
    auto d = make_disc(Scenario::carrier(), level);
    const double j = compliance(assemble_and_solve(d, uniform(*d, ElasticTensor2D::isotropic({1, 1}))));
    EXPECT_GT(j, prev);
    prev = j;
  }
}

TEST(Fem, ElementResidual) {
  auto d = make_disc(Scenario::carrier(), 2);
  const IsotropicMaterial m{1.5, 0.8};
  const auto c = ElasticTensor2D::isotropic(m);
  const auto lin = DisplacementField::interpolate(d, [](const Vec2& p) { return Vec2(0.3 * p.x() - p.y(), 2 * p.x()); }, false);
  EXPECT_LT(element_residual(lin, c, 3, 0.2, 0.7).norm(), 1e-11);
  // u = (x^2, x y): div sigma = ((lambda+2mu) 2 + (lambda+mu) ... ) from hand differentiation.
  const auto quad = DisplacementField::interpolate(d, [](const Vec2& p) { return Vec2(p.x() * p.x(), p.x() * p.y()); }, false);
  // eps_xx = 2x, eps_yy = x, eps_xy = y/2; sigma_xx = (l+2m) 2x + l x, sigma_yy = l 2x + (l+2m) x, sigma_xy = m y
  const double l = m.lambda, mu = m.mu;
  const Vec2 expect(2 * (l + 2 * mu) + l + mu, 0.0);
  for (std::size_t e : {0u, 7u, 15u}) EXPECT_LT((element_residual(quad, c, e, 0.3, 0.6) - expect).norm(), 1e-10);
}

TEST(Fem, JumpBetweenContrastingElements) {
  auto d = make_disc(Scenario::carrier(), 1);
  const auto c = ElasticTensor2D::isotropic({1, 1});
  TensorField f = uniform(*d, c);
  const auto e0 = static_cast<std::size_t>(d->mesh().leaf_index(d->mesh().locate(Vec2(0.25, 0.25))));
  f[e0] = c * 2.0;
  const Sym2 eps{0.2, -0.1, 0.15};
  const auto u = DisplacementField::interpolate(d, [&](const Vec2& p) { return Vec2(eps.matrix() * p); }, false);
  const Vec2 expect = 0.5 * (c.apply(eps).matrix() * Vec2(1, 0));
  EXPECT_LT((edge_jump(u, f, e0, Side::right, 0.4) - expect).norm(), 1e-13);
  const auto e1 = static_cast<std::size_t>(d->mesh().leaf_index(d->mesh().locate(Vec2(0.75, 0.25))));
  EXPECT_LT((edge_jump(u, f, e1, Side::left, 0.4) - expect).norm(), 1e-13);
}

TEST(Fem, JumpOnSupportsIsZero) {
  auto d = make_disc(Scenario::carrier(), 2);
  const auto c = ElasticTensor2D::isotropic({1, 1});
  const auto u = DisplacementField::interpolate(d, [](const Vec2& p) { return Vec2(p.y() * p.y(), p.x()); }, false);
  EXPECT_EQ(edge_jump(u, uniform(*d, c), 0, Side::bottom, 0.3).norm(), 0.0);
}

TEST(Fem, VonMises) {
  EXPECT_EQ(von_mises(Sym2{}), 0.0);
  EXPECT_NEAR(von_mises(Sym2{2.5, 2.5, 0}), 2.5, 1e-15);
  EXPECT_NEAR(von_mises(Sym2{-1.5, 0, 0}), 1.5, 1e-15);
  EXPECT_NEAR(von_mises(Sym2{0, 0, 1}), std::sqrt(3.0), 1e-15);
}

TEST(Fem, SingularSystemsRejected) {
  Scenario s = Scenario::carrier();
  auto d = make_disc(s, 2);
  EXPECT_THROW(assemble_and_solve(d, uniform(*d, ElasticTensor2D::zero())), SolverError);
  s.dirichlet.clear();
  auto d2 = make_disc(s, 2);
  EXPECT_THROW(assemble_and_solve(d2, uniform(*d2, ElasticTensor2D::isotropic({1, 1}))), SolverError);
}
