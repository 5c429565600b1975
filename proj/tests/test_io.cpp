#include "twoscale/io.hpp"
#include "twoscale/optimizer.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace twoscale;

namespace {

std::shared_ptr<const Discretization> make(const Scenario& sc, const QuadMesh& mesh) {
  return std::make_shared<const Discretization>(mesh, sc);
}

QuadMesh graded_carrier() {
  QuadMesh m = QuadMesh::build(Scenario::carrier(), 2);
  m = m.refined(std::vector<int>{m.leaves()[5]});
  m = m.refined(std::vector<int>{m.leaves().back(), m.leaves()[0]});
  return m;
}

std::vector<MicroParams> random_design(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> a(0.0, 3.0), d(0.05, 0.95);
  std::vector<MicroParams> p(n);
  for (auto& q : p) q = {a(rng), d(rng), d(rng)};
  return p;
}

}  // namespace

TEST(Vtk, RoundTripThroughReader) {
  const Scenario sc = Scenario::carrier();
  auto d = make(sc, graded_carrier());
  const auto p = random_design(d->num_elements(), 1);
  TensorField c(d->num_elements());
  for (std::size_t e = 0; e < c.size(); ++e) c[e] = ElasticTensor2D::isotropic(sc.material) * density(p[e]);
  const auto u = assemble_and_solve(d, c);
  const auto b = assemble_indicators(c, u, u, [&](std::size_t e, const Sym2&) { return ModelTensor{c[e], true}; },
                                     false);
  std::stringstream ss;
  write_vtk(ss, u, c, p, &b);
  const VtkGrid g = read_vtk(ss);

  ASSERT_EQ(g.points.size(), d->num_nodes());
  ASSERT_EQ(g.cells.size(), d->num_elements());
  for (int t : g.cell_types) EXPECT_EQ(t, 9);
  for (std::size_t e = 0; e < g.cells.size(); ++e) {
    ASSERT_EQ(g.cells[e].size(), 4u);
    const Element& el = d->element(e);
    const Vec2 ll = el.lower_left();
    const double h = el.size();
    const std::array<Vec2, 4> corners{ll, ll + Vec2(h, 0), ll + Vec2(h, h), ll + Vec2(0, h)};
    for (int k = 0; k < 4; ++k) EXPECT_LE((g.points[g.cells[e][k]] - corners[k]).norm(), 1e-12);
  }
  const auto& disp = g.point_vectors.at("displacement");
  double scale = u.nodal().cwiseAbs().maxCoeff();
  for (std::size_t n = 0; n < disp.size(); ++n) {
    EXPECT_NEAR(disp[n].x(), u.nodal()(2 * n), 1e-10 * scale);
    EXPECT_NEAR(disp[n].y(), u.nodal()(2 * n + 1), 1e-10 * scale);
  }
  const auto vm = von_mises(u, c);
  for (std::size_t e = 0; e < p.size(); ++e) {
    EXPECT_NEAR(g.cell_scalars.at("density")[e], density(p[e]), 1e-11);
    EXPECT_NEAR(g.cell_scalars.at("alpha")[e], p[e].alpha, 1e-11);
    EXPECT_NEAR(g.cell_scalars.at("von_mises")[e], vm[e], 1e-11 * (1.0 + vm[e]));
    EXPECT_NEAR(g.cell_scalars.at("eta_total")[e], b.element_total(e), 1e-11 * (1.0 + b.element_total(e)));
  }
}

TEST(Vtk, RejectsMalformedInput) {
  {
    std::stringstream ss("not a vtk file\n");
    EXPECT_THROW(read_vtk(ss), std::runtime_error);
  }
  {
    std::stringstream ss("# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 2 double\n0 0 0\n");
    EXPECT_THROW(read_vtk(ss), std::runtime_error);
  }
  {
    std::stringstream ss(
        "# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 1 double\n0 0 0\n"
        "CELLS 1 5\n4 0 0 0 3\nCELL_TYPES 1\n9\n");
    EXPECT_THROW(read_vtk(ss), std::runtime_error);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  auto d = make(Scenario::carrier(), graded_carrier());
  const auto p = random_design(d->num_elements(), 2);
  std::stringstream ss;
  write_checkpoint(ss, *d, p);
  const auto rows = read_checkpoint(ss);
  ASSERT_EQ(rows.size(), p.size());
  for (std::size_t e = 0; e < p.size(); ++e) {
    EXPECT_EQ(rows[e].id, d->element_id(e));
    EXPECT_EQ(rows[e].params.alpha, p[e].alpha);
    EXPECT_EQ(rows[e].params.delta1, p[e].delta1);
    EXPECT_EQ(rows[e].params.delta2, p[e].delta2);
    EXPECT_EQ(rows[e].density, density(p[e]));
  }
}

TEST(Checkpoint, RejectsBadRows) {
  std::stringstream a("id,alpha,delta1,delta2,density\n1,0.1,0.2\n");
  EXPECT_THROW(read_checkpoint(a), std::runtime_error);
  std::stringstream b("id,alpha,delta1,delta2,density\n1,0.1,x,0.3,0.4\n");
  EXPECT_THROW(read_checkpoint(b), std::runtime_error);
  std::stringstream c("alpha\n");
  EXPECT_THROW(read_checkpoint(c), std::runtime_error);
}

TEST(Resume, RebuildsMeshAndDesignFromDump) {
  const Scenario sc = Scenario::carrier();
  const QuadMesh original = graded_carrier();
  auto d = make(sc, original);
  const auto p = random_design(d->num_elements(), 3);
  std::stringstream mesh_text, design_text;
  original.dump(mesh_text);
  write_checkpoint(design_text, *d, p);

  const auto records = read_mesh_dump(mesh_text);
  ASSERT_EQ(records.size(), original.num_leaves());
  const QuadMesh rebuilt = rebuild_mesh(sc, 2, records);
  ASSERT_EQ(rebuilt.num_leaves(), original.num_leaves());
  EXPECT_TRUE(rebuilt.is_balanced());
  const auto q = match_checkpoint(rebuilt, records, read_checkpoint(design_text));
  for (std::size_t e = 0; e < q.size(); ++e) {
    const Element& el = rebuilt.element(rebuilt.leaves()[e]);
    const int src = original.leaf_index(original.locate(el.center()));
    ASSERT_GE(src, 0);
    EXPECT_EQ(original.element(original.leaves()[src]).level, el.level);
    EXPECT_EQ(q[e].alpha, p[static_cast<std::size_t>(src)].alpha);
    EXPECT_EQ(q[e].delta2, p[static_cast<std::size_t>(src)].delta2);
  }
  EXPECT_THROW(rebuild_mesh(sc, 4, records), std::runtime_error);
}

TEST(BreakdownCsv, ReparsedRowsKeepTheSumInvariant) {
  std::stringstream ss;
  write_breakdown_header(ss);
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> U(1e-4, 3.0);
  for (int s = 0; s < 20; ++s) {
    ErrorBreakdown b;
    b.edge = U(rng);
    b.volume = U(rng);
    b.model = U(rng);
    b.total = b.edge + b.volume + b.model;
    b.compliance = U(rng);
    b.elements = 64 + 10 * s;
    write_breakdown_row(ss, s, b);
  }
  const auto rows = read_breakdown_csv(ss);
  ASSERT_EQ(rows.size(), 20u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].step, static_cast<int>(i));
    EXPECT_LE(std::abs(rows[i].edge + rows[i].volume + rows[i].model - rows[i].total), 1e-9 * rows[i].total);
  }
}
