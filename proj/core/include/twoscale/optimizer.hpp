#pragma once

#include "twoscale/dwr.hpp"
#include "twoscale/fem.hpp"
#include "twoscale/microcell.hpp"

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace twoscale {

/// Per-element truss parameters with the volume target and the optimizer history.
struct DesignState {
  std::vector<MicroParams> params;
  double target_volume = 0.0;
  std::vector<double> compliance;
  std::vector<double> volume;
  std::vector<double> gradient_norm;
};

/// Uniform design with alpha = 0, delta1 = delta2 and density equal to the volume fraction.
DesignState initial_design(const Discretization& disc);

/// sum_E |E| density(q_E).
double design_volume(const Discretization& disc, const std::vector<MicroParams>& params);

TensorField design_tensors(const CellModel& model, const std::vector<MicroParams>& params);

/// dJ/dq_E = -int_E dC*/dq_E eps(u) : eps(u), ordered (alpha, delta1, delta2).
std::vector<Eigen::Vector3d> compliance_gradient(const CellModel& model, const std::vector<MicroParams>& params,
                                                 const DisplacementField& u);

/// Clamps the widths to the box and shifts them by a common multiplier, scaled by the density
/// slope of each width, until the volume equals the target. Throws std::invalid_argument when the
/// target is outside the range the box allows.
void project_volume(const Discretization& disc, std::vector<MicroParams>& params, double target);

struct OptimizerOptions {
  int max_iters = 200;
  /// Stop once an accepted step lowers the compliance by less than tol * compliance.
  double tol = 1e-6;
  int max_halvings = 30;
  /// Sufficient decrease constant of the backtracking line search.
  double armijo = 1e-4;
  /// Largest parameter change of the first trial step.
  double initial_step = 0.05;
};

struct OptimizationResult {
  DesignState design;
  TensorField tensors;
  DisplacementField u;
  int iterations = 0;
  bool converged = false;
  /// Set when the line search ran out of halvings; the last accepted iterate is returned.
  bool line_search_failed = false;
  std::string message;
};

/// Projected gradient descent with Barzilai-Borwein trial steps, backtracking and the volume
/// projection; alpha is left unconstrained and wrapped into [0, pi).
OptimizationResult optimize(std::shared_ptr<const Discretization> disc, const CellModel& model, DesignState design,
                            const OptimizerOptions& options = {});

/// Design on a refined mesh: every new leaf copies the parameters of its ancestor leaf in the old
/// mesh.
std::vector<MicroParams> prolong(const Discretization& coarse, const std::vector<MicroParams>& params,
                                 const Discretization& fine);

struct AdaptiveStep {
  int step = 0;
  std::shared_ptr<const Discretization> disc;
  OptimizationResult optimization;
  ErrorBreakdown breakdown;
};

struct AdaptiveOptions {
  int initial_level = 3;
  /// Number of estimator rows; the mesh is refined between consecutive rows.
  int rows = 15;
  double fraction = 0.4;
  int laminate_rounds = 50;
  OptimizerOptions optimizer;
  /// Resume point: rows already computed, and the mesh and design to start the next row from.
  /// Empty history starts from the uniform initial mesh and design.
  std::vector<ErrorBreakdown> history;
  std::shared_ptr<const Discretization> start;
  std::vector<MicroParams> start_params;
  /// Called after each row is complete.
  std::function<void(const AdaptiveStep&)> on_step;
};

struct AdaptiveResult {
  std::vector<ErrorBreakdown> rows;
  /// First row whose total exceeds the previous one, -1 if none.
  int turning_step = -1;
  /// Row recommended for stopping: the one before the turning step, or the last row.
  int recommended_step = -1;
};

/// optimize, estimate, mark (Doerfler), refine and prolong, row by row.
AdaptiveResult adaptive_loop(const Scenario& scenario, const CellModel& model, const AdaptiveOptions& options);

}  // namespace twoscale
