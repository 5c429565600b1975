#pragma once

#include "twoscale/tensor.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace twoscale::bem {

/// Kelvin fundamental solution u*_ki(p, q) of plane elasticity (Lame parameters of the plane
/// problem). Throws for p == q.
Mat2 kelvin(const Vec2& p, const Vec2& q, const IsotropicMaterial& m);

/// Traction kernel T_ij(x, y): traction component j at y, on a surface with unit normal n, of the
/// Kelvin solution for a unit force in direction i at x.
Mat2 traction_kernel(const Vec2& x, const Vec2& y, const Vec2& n, const IsotropicMaterial& m);

/// Integrals of the kernels against the two linear shape functions of the straight panel a -> b
/// (normal (t_y, -t_x) for unit tangent t). Collocation points on the panel line use the finite
/// part; the jump term is left to the caller.
struct PanelIntegrals {
  std::array<Mat2, 2> single;  // integral of U phi_a
  std::array<Mat2, 2> dbl;     // integral of T phi_a
};
PanelIntegrals layer_integrals(const Vec2& a, const Vec2& b, const Vec2& x, const IsotropicMaterial& m);

struct BoundaryNode {
  Vec2 point;
  Vec2 normal;  // outward from the hard phase
  int loop = 0;  // 0 outer square, 1 hole
  Vec2 w = Vec2::Zero();
  Vec2 t = Vec2::Zero();
};

struct BemCellResult {
  std::vector<BoundaryNode> nodes;
  /// C* xi : xi
  double energy = 0.0;
  /// Relative residual of the least-squares collocation solve.
  double residual = 0.0;
};

/// Collocation BEM for the corrector of the perforated cell [0,1]^2 minus the hole
/// [d1/2, 1-d1/2] x [d2/2, 1-d2/2] (void), rotated by alpha about the origin. Outer edges get
/// panels_per_edge panels, hole edges a proportional number.
BemCellResult solve_cell_bem(double d1, double d2, const Sym2& xi, const IsotropicMaterial& m, int panels_per_edge,
                             double alpha = 0.0);

/// Effective tensor by polarization over the unit strains.
ElasticTensor2D bem_effective_tensor(double d1, double d2, const IsotropicMaterial& m, int panels_per_edge,
                                     double alpha = 0.0);

/// CSV rows: x, y, nx, ny, loop, wx, wy, tx, ty.
void write_boundary_csv(std::ostream& os, const BemCellResult& r);

}  // namespace twoscale::bem
