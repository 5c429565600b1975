#include "twoscale/bem.hpp"
#include "twoscale/dwr.hpp"
#include "twoscale/lamination.hpp"
#include "twoscale/optimizer.hpp"

#include <benchmark/benchmark.h>

using namespace twoscale;

namespace {

std::shared_ptr<const Discretization> carrier(int level) {
  const Scenario sc = Scenario::carrier();
  return std::make_shared<const Discretization>(QuadMesh::build(sc, level), sc);
}

TensorField half_solid(const Discretization& d) {
  return TensorField(d.num_elements(), ElasticTensor2D::isotropic(IsotropicMaterial{}) * 0.5);
}

}  // namespace

static void BM_MeshRefine(benchmark::State& state) {
  const QuadMesh base = QuadMesh::build(Scenario::carrier(), static_cast<int>(state.range(0)));
  std::vector<int> marked;
  for (std::size_t i = 0; i < base.num_leaves(); i += 7) marked.push_back(base.leaves()[i]);
  for (auto _ : state) benchmark::DoNotOptimize(base.refined(marked).num_leaves());
}
BENCHMARK(BM_MeshRefine)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_AssembleAndSolve(benchmark::State& state) {
  auto d = carrier(static_cast<int>(state.range(0)));
  const TensorField c = half_solid(*d);
  for (auto _ : state) benchmark::DoNotOptimize(compliance(assemble_and_solve(d, c)));
  state.counters["elements"] = static_cast<double>(d->num_elements());
}
BENCHMARK(BM_AssembleAndSolve)->Arg(3)->Arg(5)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_CellSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_cell(0.35, 0.6, CellMaterials{}, n).tensor.c1111);
}
BENCHMARK(BM_CellSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_BemCell(benchmark::State& state) {
  const int panels = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(bem::solve_cell_bem(0.35, 0.6, Sym2{1, 0, 0}, IsotropicMaterial{}, panels).energy);
}
BENCHMARK(BM_BemCell)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_TableLookup(benchmark::State& state) {
  static const TabulatedCellModel model(CellMaterials{}, 16);
  double d = 0.1;
  for (auto _ : state) {
    d = d > 0.9 ? 0.1 : d + 0.0137;
    benchmark::DoNotOptimize(model.sensitivities(MicroParams{0.3, d, 1.0 - d}).d_delta1.c1111);
  }
}
BENCHMARK(BM_TableLookup);

static void BM_LaminateInversion(benchmark::State& state) {
  const IsotropicMaterial a{};
  const Sym2 eps{0.8, -0.3, 0.25};
  for (auto _ : state) {
    const auto roots = laminate_stress_roots(eps, 3.0, a);
    benchmark::DoNotOptimize(newton_invert(eps, 3.0, a, roots.front()).converged);
  }
}
BENCHMARK(BM_LaminateInversion);

static void BM_ComplianceGradient(benchmark::State& state) {
  static const TabulatedCellModel model(CellMaterials{}, 16);
  auto d = carrier(static_cast<int>(state.range(0)));
  const DesignState s = initial_design(*d);
  const auto u = assemble_and_solve(d, design_tensors(model, s.params));
  for (auto _ : state) benchmark::DoNotOptimize(compliance_gradient(model, s.params, u).size());
}
BENCHMARK(BM_ComplianceGradient)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_Estimate(benchmark::State& state) {
  auto d = carrier(static_cast<int>(state.range(0)));
  const TensorField c = half_solid(*d);
  const auto u = assemble_and_solve(d, c);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(d, c, u, static_cast<int>(state.range(1))).total);
}
BENCHMARK(BM_Estimate)->Args({3, 5})->Args({4, 20})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
