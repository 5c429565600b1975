#pragma once

#include "twoscale/fem.hpp"
#include "twoscale/lamination.hpp"
#include "twoscale/tensor.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace twoscale {

/// Laminate iterate (u^L_k, C^L_k) started from a two-scale state.
struct LaminateApproximation {
  TensorField tensors;
  DisplacementField u;
  /// Volume multiplier of the last laminate update.
  double multiplier = 0.0;
  int rounds = 0;
  /// Compliance after each round.
  std::vector<double> compliance;
};

/// k rounds of the alternating laminate scheme from (C_S, u_S). k = 0 returns the inputs, with
/// the multiplier computed from the stresses C_S eps(u_S).
LaminateApproximation approximate_uL(std::shared_ptr<const Discretization> disc, const TensorField& c_s,
                                     const DisplacementField& u_s, int k);

/// Bi-quartic Lagrange interpolant of a Q2 field through the 5x5 Q2 nodes of the four siblings of
/// an element, evaluated in the element's reference coordinates. Without a complete sibling group
/// it falls back to the field itself.
class BiquarticPatch {
 public:
  BiquarticPatch(const DisplacementField& u, std::size_t e);

  bool fallback() const { return fallback_; }
  Vec2 value(double xi, double eta) const;
  /// Physical gradient (row = component).
  Mat2 gradient(double xi, double eta) const;
  Sym2 strain(double xi, double eta) const { return Sym2::strain_of(gradient(xi, eta)); }

 private:
  Vec2 patch_coords(double xi, double eta) const;

  const DisplacementField* u_ = nullptr;
  std::size_t e_ = 0;
  bool fallback_ = true;
  // element offset and scale inside the parent square
  Vec2 offset_ = Vec2::Zero();
  double scale_ = 1.0;
  double parent_size_ = 1.0;
  std::array<std::array<Vec2, 5>, 5> nodes_{};  // nodes_[j][i] at (i/4, j/4)
};

struct ModelTensor {
  ElasticTensor2D tensor;
  bool converged = false;
};

/// Laminate tensor whose response to eps is its own optimal stress, by Newton inversion started
/// from the closed-form root nearest to the stress fallback * eps. Returns the fallback on
/// eps = 0 or when Newton fails.
ModelTensor approximate_CL(const Sym2& eps, double l, const IsotropicMaterial& a, const ElasticTensor2D& fallback);

/// Per-element indicators and totals of one estimator evaluation.
struct ErrorBreakdown {
  std::vector<double> eta_volume;
  std::vector<double> eta_edge;
  /// |eta_C| per element.
  std::vector<double> eta_model;
  std::vector<double> eta_model_signed;

  double edge = 0.0;
  double volume = 0.0;
  /// 1/2 sum |eta_C|.
  double model = 0.0;
  /// 1/2 sum eta_C.
  double model_signed = 0.0;
  double total = 0.0;
  double compliance = 0.0;
  std::size_t elements = 0;

  int patch_fallbacks = 0;
  int newton_failures = 0;

  /// eta_u + eta_dE + 1/2 |eta_C| of element e.
  double element_total(std::size_t e) const { return eta_volume[e] + eta_edge[e] + 0.5 * eta_model[e]; }
  std::vector<double> element_totals() const;
};

/// Model tensor at a quadrature point of element e given the strain of the weight there.
using ModelTensorFn = std::function<ModelTensor(std::size_t e, const Sym2& eps)>;

/// Indicators of (C_S, u_S) with model tensors from `model` and displacement weight u_L, taken
/// through its bi-quartic patches when `patch` is set and as is otherwise.
ErrorBreakdown assemble_indicators(const TensorField& c_s, const DisplacementField& u_s, const DisplacementField& u_l,
                                   const ModelTensorFn& model, bool patch = true);
/// Indicators with model tensors from approximate_CL, falling back to the laminate iterate.
ErrorBreakdown assemble_indicators(const TensorField& c_s, const DisplacementField& u_s,
                                   const LaminateApproximation& lam);

/// approximate_uL followed by assemble_indicators.
ErrorBreakdown estimate(std::shared_ptr<const Discretization> disc, const TensorField& c_s, const DisplacementField& u_s,
                        int k);

/// Terms of the trapezoidal error representation along C_S + s e_C, u_S + s e_u of
/// L(C, u) = 2 l(u) - a(C; u, u).
struct TrapezoidCheck {
  double e_lagrangian = 0.0;
  double f0 = 0.0;
  double f1 = 0.0;
  /// Cubic correction 1/2 a(e_C; e_u, e_u).
  double remainder = 0.0;
  /// e_L - 1/2 (f0 + f1) - remainder.
  double residual = 0.0;
  /// Largest magnitude among the terms.
  double scale = 0.0;
  /// State part of f(1): 2 l(e_u) - 2 a(C_L; u_L, e_u).
  double f1_state = 0.0;
  /// Design part of f(1): -a(e_C; u_L, u_L).
  double f1_design = 0.0;
};
TrapezoidCheck trapezoid_identity_check(const TensorField& c_s, const DisplacementField& u_s, const TensorField& c_l,
                                        const DisplacementField& u_l);

/// CSV row layout: step,edge,volume,model,total,compliance,elements.
void write_breakdown_header(std::ostream& os);
void write_breakdown_row(std::ostream& os, int step, const ErrorBreakdown& b);

}  // namespace twoscale
