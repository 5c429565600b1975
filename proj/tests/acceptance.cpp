// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
// Usage: acceptance [criterion numbers...]; no arguments runs all eight.

#include "twoscale/bem.hpp"
#include "twoscale/dwr.hpp"
#include "twoscale/lamination.hpp"
#include "twoscale/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace twoscale;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::shared_ptr<const Discretization> make(const Scenario& sc, int level) {
  return std::make_shared<const Discretization>(QuadMesh::build(sc, level), sc);
}

Scenario tension() {
  Scenario sc = Scenario::carrier();
  sc.name = "tension";
  sc.dirichlet = {{{Vec2(0, 0), Vec2(1, 0)}, false, true, Vec2::Zero()},
                  {{Vec2(0, 0), Vec2(0, 1)}, true, false, Vec2::Zero()}};
  sc.loads = {{{Vec2(1, 0), Vec2(1, 1)}, Vec2(1.0, 0.0)}};
  return sc;
}

const TabulatedCellModel& coarse_table() {
  static const TabulatedCellModel model(CellMaterials{}, 32);
  return model;
}

Outcome laminate_closed_forms() {
  const IsotropicMaterial a{1.0, 1.0};
  double err = 0.0;
  for (double m : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    const ElasticTensor2D c = laminate_tensor_bare(m, 1.0, a);
    err = std::max({err, std::abs(c.c1111 - 3.0), std::abs(c.c2222 - 3.0), std::abs(c.c1122 - 1.0)});
  }
  return {err <= 1e-12, fmt("theta = 1: max |(C1111, C2222, C1122) - (3, 3, 1)| = %.2e over 7 values of m", err), {}};
}

Outcome effective_tensor_limits() {
  const CellMaterials mat{};
  const int n = 64;
  const ElasticTensor2D a = ElasticTensor2D::isotropic(mat.hard);
  double full = 0.0;
  for (double alpha : {0.0, 0.7, 2.2}) full = std::max(full, (effective_tensor({alpha, 1.0, 1.0}, mat, n) - a).max_abs());

  double rot = 0.0, sym = 0.0;
  for (auto [d1, d2, alpha] : {std::tuple{0.3, 0.6, 0.4}, {0.55, 0.2, 1.3}, {0.8, 0.45, 2.6}}) {
    const ElasticTensor2D aligned = effective_tensor({0.0, d1, d2}, mat, n);
    const ElasticTensor2D c = effective_tensor({alpha, d1, d2}, mat, n);
    rot = std::max(rot, (c - aligned.rotated(alpha)).max_abs());
    sym = std::max(sym, (c - effective_tensor({alpha + std::numbers::pi / 2.0, d2, d1}, mat, n)).max_abs());
  }

  const ElasticTensor2D b = ElasticTensor2D::isotropic(mat.soft());
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  double worst = -1e300;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const double d1 = 0.01 + 0.98 * i / 9.0, d2 = 0.01 + 0.98 * j / 9.0;
      const double f = density(d1, d2);
      const ElasticTensor2D c = solve_cell(d1, d2, mat, n).tensor;
      const ElasticTensor2D voigt = a * f + b * (1.0 - f);
      for (int k = 0; k < 4; ++k) {
        const Sym2 xi{g(rng), g(rng), g(rng)};
        worst = std::max(worst, (c.energy(xi) - voigt.energy(xi)) / voigt.energy(xi));
      }
    }
  const bool pass = full <= 1e-8 && rot <= 1e-10 && sym <= 1e-10 && worst <= 1e-12;
  return {pass,
          fmt("full cell - A = %.1e, rotation %.1e, quarter-turn swap %.1e, max Voigt excess %.1e (N = %d)", full, rot,
              sym, worst, n),
          {}};
}

Outcome backend_cross_check() {
  const CellMaterials mat{};
  const std::array<std::array<double, 2>, 3> widths{{{0.3, 0.3}, {0.5, 0.5}, {0.7, 0.4}}};
  const std::array<Sym2, 3> strains{Sym2{1, 0, 0}, Sym2{0, 1, 0}, Sym2{0, 0, 1}};
  const char* names[3] = {"e11", "e22", "e12"};
  Outcome o;
  double worst = 0.0;
  for (const auto& w : widths) {
    const ElasticTensor2D fine = solve_cell(w[0], w[1], mat, 256).tensor;
    for (int k = 0; k < 3; ++k) {
      const double ef = fine.energy(strains[k]);
      const double eb = bem::solve_cell_bem(w[0], w[1], strains[k], mat.hard, 64).energy;
      const double rel = std::abs(eb - ef) / ef;
      worst = std::max(worst, rel);
      o.details.push_back(fmt("(%.1f, %.1f) %s: boundary elements %.6f, grid N = 256 %.6f, difference %.2f%%", w[0],
                              w[1], names[k], eb, ef, 100.0 * rel));
    }
  }
  o.pass = worst <= 0.03;
  o.summary = fmt("largest relative difference %.2f%% over 9 energies (limit 3%%)", 100.0 * worst);
  return o;
}

Outcome trapezoid_identity() {
  auto d = make(Scenario::carrier(), 1);
  std::mt19937 rng(5);
  std::normal_distribution<double> N;
  auto field = [&] {
    Eigen::VectorXd x(d->num_dofs());
    for (auto& v : x) v = N(rng);
    return DisplacementField::from_dofs(d, x);
  };
  auto tensors = [&] {
    TensorField t(d->num_elements());
    for (auto& c : t)
      c = ElasticTensor2D(2 + N(rng), 2 + N(rng), 0.5 * N(rng), 1 + 0.2 * N(rng), 0.1 * N(rng), 0.1 * N(rng));
    return t;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TrapezoidCheck t = trapezoid_identity_check(tensors(), field(), tensors(), field());
    worst = std::max(worst, std::abs(t.residual) / t.scale);
  }
  return {worst <= 1e-12,
          fmt("max |residual| / scale = %.2e over 100 random pairs on %zu elements", worst, d->num_elements()),
          {}};
}

Outcome gradient_check() {
  auto d = make(Scenario::cantilever(), 2);
  const DirectCellModel model(CellMaterials{}, 32);
  std::vector<MicroParams> p(d->num_elements());
  for (std::size_t e = 0; e < p.size(); ++e) p[e] = {0.3 + 0.11 * e, 0.34375 + 0.003 * e, 0.40625 - 0.002 * e};
  auto J = [&](const std::vector<MicroParams>& q) { return compliance(assemble_and_solve(d, design_tensors(model, q))); };
  const auto u = assemble_and_solve(d, design_tensors(model, p));
  const auto g = compliance_gradient(model, p, u);
  double err = 0.0, norm = 0.0;
  for (std::size_t e = 0; e < p.size(); ++e)
    for (int k = 0; k < 3; ++k) {
      const double h = k == 0 ? 1e-5 : 1e-4;
      auto plus = p, minus = p;
      double MicroParams::*field = k == 0 ? &MicroParams::alpha : k == 1 ? &MicroParams::delta1 : &MicroParams::delta2;
      plus[e].*field += h;
      minus[e].*field -= h;
      const double fd = (J(plus) - J(minus)) / (2.0 * h);
      err += (g[e](k) - fd) * (g[e](k) - fd);
      norm += fd * fd;
    }
  const double rel = std::sqrt(err / norm);
  return {rel <= 1e-3, fmt("relative error %.2e over %zu elements x 3 parameters (limit 1e-3)", rel, p.size()), {}};
}

Outcome carrier_trend() {
  const double step0 = 2.163037, optimum = 1.83992;
  Outcome o;
  AdaptiveOptions opt;
  opt.initial_level = 3;
  opt.rows = 12;
  opt.laminate_rounds = 20;
  const auto t0 = Clock::now();
  opt.on_step = [&](const AdaptiveStep& s) {
    const auto& b = s.breakdown;
    o.details.push_back(fmt("step %2d: edge %.6f volume %.6f model %.6f total %.6f J %.6f elements %zu (%.0f s)",
                            s.step, b.edge, b.volume, b.model, b.total, b.compliance, b.elements,
                            std::chrono::duration<double>(Clock::now() - t0).count()));
  };
  const AdaptiveResult r = adaptive_loop(Scenario::carrier(), coarse_table(), opt);
  const auto& rows = r.rows;

  const double j0 = rows[0].compliance;
  const bool a = std::abs(j0 - step0) <= 0.05 * step0;
  double jmin = rows[5].compliance;
  for (int s = 5; s <= 11; ++s) jmin = std::min(jmin, rows[s].compliance);
  const bool b = std::abs(jmin - optimum) <= 0.06 * optimum;
  bool falls = true;
  for (int s = 1; s <= 4; ++s) falls = falls && rows[s].total < rows[s - 1].total;
  int turn = -1;
  for (std::size_t s = 5; s < rows.size() && turn < 0; ++s)
    if (rows[s].total >= rows[s - 1].total) turn = static_cast<int>(s);
  const bool c = falls && turn > 0;
  o.pass = a && b && c;
  o.summary = fmt("(a) %s J0 = %.4f vs 2.163037 (ratio %.3f); (b) %s min J steps 5-11 = %.4f vs 1.83992 (ratio %.3f); "
                  "(c) %s first 4 steps %s, turning step %d",
                  a ? "ok" : "off", j0, j0 / step0, b ? "ok" : "off", jmin, jmin / optimum, c ? "ok" : "off",
                  falls ? "decrease" : "do not decrease", turn);
  return o;
}

Outcome uniform_refinement() {
  const Scenario sc = Scenario::carrier();
  Outcome o;
  std::vector<double> edge;
  std::shared_ptr<const Discretization> prev;
  std::vector<MicroParams> params;
  const auto t0 = Clock::now();
  for (int level = 3; level <= 6; ++level) {
    auto d = make(sc, level);
    DesignState design = initial_design(*d);
    if (prev) design.params = prolong(*prev, params, *d);
    const OptimizationResult r = optimize(d, coarse_table(), design);
    const ErrorBreakdown b = estimate(d, r.tensors, r.u, 20);
    edge.push_back(b.edge);
    o.details.push_back(fmt("level %d: edge %.6f volume %.6f model %.6f total %.6f J %.6f elements %zu (%.0f s)", level,
                            b.edge, b.volume, b.model, b.total, b.compliance, b.elements,
                            std::chrono::duration<double>(Clock::now() - t0).count()));
    prev = d;
    params = r.design.params;
  }
  bool mono = true;
  for (std::size_t i = 1; i < edge.size(); ++i) mono = mono && edge[i] < edge[i - 1];
  o.pass = mono;
  o.summary = fmt("edge indicator %.4f -> %.4f -> %.4f -> %.4f", edge[0], edge[1], edge[2], edge[3]);
  return o;
}

Outcome model_nullification() {
  const Scenario sc = tension();
  auto d = make(sc, 3);
  const double delta = 1.0 - std::sqrt(1.0 - sc.volume_fraction);
  const TensorField truss(d->num_elements(), effective_tensor(MicroParams{0.0, delta, delta}, CellMaterials{}, 32));
  const auto u_truss = assemble_and_solve(d, truss);
  const ErrorBreakdown before = estimate(d, truss, u_truss, 5);
  const LaminateApproximation lam = approximate_uL(d, truss, u_truss, 5);
  const auto u_lam = assemble_and_solve(d, lam.tensors);
  const ErrorBreakdown after = estimate(d, lam.tensors, u_lam, 5);
  return {after.model < 1e-10,
          fmt("model term %.3e with truss tensors, %.3e after overwriting by laminate tensors (%zu elements)",
              before.model, after.model, d->num_elements()),
          {}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"laminate closed forms", laminate_closed_forms},
      {"effective tensor limits", effective_tensor_limits},
      {"cell backend cross-check", backend_cross_check},
      {"trapezoid identity", trapezoid_identity},
      {"compliance gradient", gradient_check},
      {"carrier adaptive trend", carrier_trend},
      {"uniform refinement trend", uniform_refinement},
      {"model error nullification", model_nullification},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.summary.c_str(), secs);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
