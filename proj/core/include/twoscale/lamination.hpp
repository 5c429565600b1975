#pragma once

#include "twoscale/fem.hpp"
#include "twoscale/tensor.hpp"

#include <memory>
#include <vector>

namespace twoscale {

/// Eigen-decomposition of a symmetric stress: sigma = R(alpha) diag(l1, l2) R(alpha)^T with
/// |l1| >= |l2|, alpha in [0, pi). Equal magnitudes resolve to alpha = 0.
struct StressEigen {
  double alpha = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;

  static StressEigen of(const Sym2& sigma);
  Sym2 reconstruct() const;
};

/// Rank-2 laminate parameters: eigenframe angle, inner ratio m and density theta.
struct LaminateParams {
  double alpha = 0.0;
  double m = 0.0;
  double theta = 0.0;
};

/// Regularization added to laminate tensors as a multiple of the identity on Sym(2).
inline double laminate_regularization(const IsotropicMaterial& a) { return 1e-4 * a.mu; }

/// Optimal laminate for stress sigma and volume multiplier l > 0. sigma = 0 gives m = theta = 0.
LaminateParams laminate_params(const Sym2& sigma, double l, const IsotropicMaterial& a);
LaminateParams laminate_params(const StressEigen& s, double l, const IsotropicMaterial& a);

/// Laminate tensor of A with void, regularized, rotated by alpha.
ElasticTensor2D laminate_tensor(double alpha, double m, double theta, const IsotropicMaterial& a);
inline ElasticTensor2D laminate_tensor(const LaminateParams& p, const IsotropicMaterial& a) {
  return laminate_tensor(p.alpha, p.m, p.theta, a);
}
/// Unregularized axis-aligned tensor.
ElasticTensor2D laminate_tensor_bare(double m, double theta, const IsotropicMaterial& a);

/// Optimal laminate tensor for the stress with eigenframe alpha and eigenvalues (l1, l2).
ElasticTensor2D laminate_from_stress(double alpha, double l1, double l2, double l, const IsotropicMaterial& a);

struct NewtonInversion {
  double alpha = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  ElasticTensor2D tensor;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Stresses sigma whose unregularized optimal laminate satisfies C(sigma) eps = sigma. In the
/// common eigenframe eps = A^-1 sigma + c (1 - theta) / theta S sign(sigma) with
/// S = |l1| + |l2| and c = (kappa + mu) / (4 kappa mu), which is linear in each sign pattern; the
/// clamped branch theta = 1 gives sigma = A eps, and rank-one roots sit on the kinks where one
/// eigenvalue vanishes. All consistent roots are returned.
std::vector<StressEigen> laminate_stress_roots(const Sym2& eps, double l, const IsotropicMaterial& a);

/// Damped Newton on F(alpha, l1, l2) = C(alpha, l1, l2) eps - R diag(l1, l2) R^T with a finite
/// difference Jacobian, started from the given stress eigen-decomposition.
NewtonInversion newton_invert(const Sym2& eps, double l, const IsotropicMaterial& a, const StressEigen& start);
/// Starts from the stress A eps.
NewtonInversion newton_invert(const Sym2& eps, double l, const IsotropicMaterial& a);

/// Multiplier l such that sum_E area_E theta_E = target. Throws SolverError with the achieved
/// volume when the target exceeds what full density on all loaded elements provides.
double volume_multiplier(const std::vector<Sym2>& stresses, const std::vector<double>& areas, double target,
                         const IsotropicMaterial& a);

struct AlternatingResult {
  TensorField tensors;
  DisplacementField u;
  double multiplier = 0.0;
  std::vector<LaminateParams> params;
  /// Compliance after each round.
  std::vector<double> compliance;
  /// Volume after each round.
  std::vector<double> volume;
};

/// Up to `rounds` rounds of stress evaluation (element-mean strain), laminate update under the
/// volume constraint of the scenario, and state solve. Stops early once consecutive compliances
/// differ by at most tolerance * compliance.
AlternatingResult alternating_optimize(std::shared_ptr<const Discretization> disc, const TensorField& tensors,
                                       const DisplacementField& u, int rounds, double tolerance = 0.0);

}  // namespace twoscale
