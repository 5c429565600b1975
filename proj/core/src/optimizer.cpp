#include "twoscale/optimizer.hpp"

#include "parallel.hpp"
#include "twoscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace twoscale {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a, std::numbers::pi);
  return a < 0.0 ? a + std::numbers::pi : a;
}

double clamp_width(double d) { return std::clamp(d, kDeltaMin, kDeltaMax); }

std::vector<double> element_areas(const Discretization& disc) {
  std::vector<double> a(disc.num_elements());
  for (std::size_t e = 0; e < a.size(); ++e) a[e] = disc.element(e).area();
  return a;
}

}  // namespace

DesignState initial_design(const Discretization& disc) {
  const Scenario& sc = disc.scenario();
  const double delta = 1.0 - std::sqrt(1.0 - sc.volume_fraction);
  DesignState d;
  d.params.assign(disc.num_elements(), MicroParams{0.0, delta, delta});
  d.target_volume = sc.volume_fraction * sc.area();
  return d;
}

double design_volume(const Discretization& disc, const std::vector<MicroParams>& params) {
  double v = 0.0;
  for (std::size_t e = 0; e < params.size(); ++e) v += disc.element(e).area() * density(params[e]);
  return v;
}

TensorField design_tensors(const CellModel& model, const std::vector<MicroParams>& params) {
  TensorField t(params.size());
  detail::parallel_for(static_cast<int>(params.size()), [&](int e) { t[e] = model.tensor(params[e]); });
  return t;
}

std::vector<Eigen::Vector3d> compliance_gradient(const CellModel& model, const std::vector<MicroParams>& params,
                                                 const DisplacementField& u) {
  const std::vector<Eigen::Matrix3d> moments = strain_moments(u);
  std::vector<Eigen::Vector3d> g(params.size());
  detail::parallel_for(static_cast<int>(params.size()), [&](int e) {
    const TensorSensitivities s = model.sensitivities(params[e]);
    const Eigen::Matrix3d& m = moments[e];
    g[e] = -Eigen::Vector3d(s.d_alpha.voigt().cwiseProduct(m).sum(), s.d_delta1.voigt().cwiseProduct(m).sum(),
                            s.d_delta2.voigt().cwiseProduct(m).sum());
  });
  return g;
}

void project_volume(const Discretization& disc, std::vector<MicroParams>& params, double target) {
  const std::vector<double> areas = element_areas(disc);
  double total = 0.0;
  for (double a : areas) total += a;
  if (!(target >= total * density(kDeltaMin, kDeltaMin) && target <= total * density(kDeltaMax, kDeltaMax)))
    throw std::invalid_argument("project_volume: target outside the attainable range");

  const std::vector<MicroParams> base = params;
  auto apply = [&](double mu) {
    double v = 0.0;
    for (std::size_t e = 0; e < params.size(); ++e) {
      const double d1 = clamp_width(base[e].delta1), d2 = clamp_width(base[e].delta2);
      params[e].delta1 = clamp_width(d1 + mu * (1.0 - d2));
      params[e].delta2 = clamp_width(d2 + mu * (1.0 - d1));
      v += areas[e] * density(params[e]);
    }
    return v;
  };
  double v = apply(0.0);
  if (std::abs(v - target) <= 1e-14 * target) return;
  // the shift needed to move a width across the whole box is at most 1 / (1 - kDeltaMax)
  const double reach = 2.0 / (1.0 - kDeltaMax);
  double lo = v < target ? 0.0 : -reach, hi = v < target ? reach : 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * reach; ++it) {
    const double mid = 0.5 * (lo + hi);
    (apply(mid) < target ? lo : hi) = mid;
  }
  const double vlo = apply(lo);
  const double vhi = apply(hi);
  apply(std::abs(vlo - target) < std::abs(vhi - target) ? lo : hi);
}

OptimizationResult optimize(std::shared_ptr<const Discretization> disc, const CellModel& model, DesignState design,
                            const OptimizerOptions& options) {
  const std::size_t ne = disc->num_elements();
  if (design.params.size() != ne) throw std::invalid_argument("optimize: design size mismatch");
  const std::vector<double> areas = element_areas(*disc);
  project_volume(*disc, design.params, design.target_volume);

  OptimizationResult r;
  r.tensors = design_tensors(model, design.params);
  r.u = assemble_and_solve(disc, r.tensors);
  double J = compliance(r.u);
  std::vector<Eigen::Vector3d> g = compliance_gradient(model, design.params, r.u);

  auto grad_norm = [&](const std::vector<Eigen::Vector3d>& gr) {
    double s = 0.0;
    for (std::size_t e = 0; e < ne; ++e) s += gr[e].squaredNorm() / areas[e];
    return std::sqrt(s);
  };
  design.compliance.push_back(J);
  design.volume.push_back(design_volume(*disc, design.params));
  design.gradient_norm.push_back(grad_norm(g));

  double max_dir = 0.0;
  for (std::size_t e = 0; e < ne; ++e) max_dir = std::max(max_dir, (g[e] / areas[e]).cwiseAbs().maxCoeff());
  if (max_dir == 0.0) {
    r.converged = true;
    r.design = std::move(design);
    return r;
  }
  double step = options.initial_step / max_dir;

  std::vector<MicroParams> prev_params;
  std::vector<Eigen::Vector3d> prev_g;
  for (int it = 0; it < options.max_iters; ++it) {
    if (!prev_params.empty()) {
      // Barzilai-Borwein step in the area-weighted metric
      double ss = 0.0, sy = 0.0;
      for (std::size_t e = 0; e < ne; ++e) {
        const Eigen::Vector3d s(design.params[e].alpha - prev_params[e].alpha,
                                design.params[e].delta1 - prev_params[e].delta1,
                                design.params[e].delta2 - prev_params[e].delta2);
        ss += areas[e] * s.squaredNorm();
        sy += s.dot(g[e] - prev_g[e]);
      }
      step = sy > 0.0 ? ss / sy : 2.0 * step;
    }

    bool accepted = false;
    std::vector<MicroParams> trial;
    TensorField trial_tensors;
    DisplacementField trial_u;
    double trial_J = J;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      trial = design.params;
      for (std::size_t e = 0; e < ne; ++e) {
        const Eigen::Vector3d d = -step * g[e] / areas[e];
        trial[e].alpha += d(0);
        trial[e].delta1 += d(1);
        trial[e].delta2 += d(2);
      }
      project_volume(*disc, trial, design.target_volume);
      double decrease = 0.0;
      for (std::size_t e = 0; e < ne; ++e)
        decrease += g[e].dot(Eigen::Vector3d(trial[e].alpha - design.params[e].alpha,
                                             trial[e].delta1 - design.params[e].delta1,
                                             trial[e].delta2 - design.params[e].delta2));
      trial_tensors = design_tensors(model, trial);
      trial_u = assemble_and_solve(disc, trial_tensors);
      trial_J = compliance(trial_u);
      if (trial_J <= J + options.armijo * std::min(decrease, 0.0) && trial_J <= J) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      r.line_search_failed = true;
      std::ostringstream os;
      os << "line search failed after " << options.max_halvings << " halvings at iteration " << it << ", compliance "
         << J << ", gradient norm " << grad_norm(g);
      r.message = os.str();
      break;
    }
    prev_params = std::move(design.params);
    prev_g = std::move(g);
    design.params = std::move(trial);
    r.tensors = std::move(trial_tensors);
    r.u = std::move(trial_u);
    const double decrease = J - trial_J;
    J = trial_J;
    g = compliance_gradient(model, design.params, r.u);
    design.compliance.push_back(J);
    design.volume.push_back(design_volume(*disc, design.params));
    design.gradient_norm.push_back(grad_norm(g));
    r.iterations = it + 1;
    if (decrease < options.tol * J) {
      r.converged = true;
      break;
    }
  }
  for (auto& q : design.params) q.alpha = wrap_angle(q.alpha);
  r.design = std::move(design);
  return r;
}

std::vector<MicroParams> prolong(const Discretization& coarse, const std::vector<MicroParams>& params,
                                 const Discretization& fine) {
  const QuadMesh& cm = coarse.mesh();
  const QuadMesh& fm = fine.mesh();
  const int known = static_cast<int>(cm.num_elements_total());
  std::vector<MicroParams> out(fine.num_elements());
  for (std::size_t e = 0; e < out.size(); ++e) {
    int id = fine.element_id(e);
    while (id >= known || cm.leaf_index(id) < 0) {
      id = fm.element(id).parent;
      if (id < 0) throw std::invalid_argument("prolong: meshes do not share a refinement history");
    }
    out[e] = params[static_cast<std::size_t>(cm.leaf_index(id))];
  }
  return out;
}

AdaptiveResult adaptive_loop(const Scenario& scenario, const CellModel& model, const AdaptiveOptions& options) {
  if (options.rows < 1) throw std::invalid_argument("adaptive_loop: at least one row required");
  AdaptiveResult result;
  result.rows = options.history;
  const int first = static_cast<int>(options.history.size());
  if (first >= options.rows) throw std::invalid_argument("adaptive_loop: history already holds every row");
  std::shared_ptr<const Discretization> disc = options.start;
  DesignState design;
  if (disc) {
    if (options.start_params.size() != disc->num_elements())
      throw std::invalid_argument("adaptive_loop: start design size mismatch");
    design = initial_design(*disc);
    design.params = options.start_params;
  } else {
    if (first > 0) throw std::invalid_argument("adaptive_loop: history given without a start mesh");
    disc = std::make_shared<const Discretization>(QuadMesh::build(scenario, options.initial_level), scenario);
    design = initial_design(*disc);
  }
  for (int step = 1; step < first; ++step)
    if (result.turning_step < 0 && result.rows[step].total > result.rows[step - 1].total) result.turning_step = step;

  for (int step = first; step < options.rows; ++step) {
    AdaptiveStep s;
    s.step = step;
    s.disc = disc;
    s.optimization = optimize(disc, model, design, options.optimizer);
    s.breakdown = estimate(disc, s.optimization.tensors, s.optimization.u, options.laminate_rounds);
    result.rows.push_back(s.breakdown);
    if (result.turning_step < 0 && step > 0 && s.breakdown.total > result.rows[step - 1].total)
      result.turning_step = step;
    if (options.on_step) options.on_step(s);
    if (step + 1 == options.rows) break;

    const auto& leaves = disc->mesh().leaves();
    const std::vector<double> eta = s.breakdown.element_totals();
    const std::vector<int> marked = mark_doerfler(eta, leaves, options.fraction);
    auto fine = std::make_shared<const Discretization>(disc->mesh().refined(marked), scenario);
    design.params = prolong(*disc, s.optimization.design.params, *fine);
    disc = std::move(fine);
  }
  result.recommended_step = result.turning_step > 0 ? result.turning_step - 1 : static_cast<int>(result.rows.size()) - 1;
  return result;
}

}  // namespace twoscale
