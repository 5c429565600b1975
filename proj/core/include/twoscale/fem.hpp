#pragma once

#include "twoscale/mesh.hpp"
#include "twoscale/scenario.hpp"
#include "twoscale/tensor.hpp"

#include <Eigen/Sparse>

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace twoscale {

/// Tensor-product Lagrange Q2 basis on the reference square [0,1]^2, nodes at {0, 1/2, 1}^2,
/// local node index 3*j + i.
namespace q2 {
std::array<double, 9> values(double xi, double eta);
std::array<Vec2, 9> gradients(double xi, double eta);
/// Second derivatives (d_xx, d_yy, d_xy) in reference coordinates.
std::array<Eigen::Vector3d, 9> hessians(double xi, double eta);
}  // namespace q2

/// Three-point Gauss rule on [0,1] (exact to degree 5).
struct Gauss3 {
  static constexpr std::array<double, 3> points{0.11270166537925831, 0.5, 0.88729833462074169};
  static constexpr std::array<double, 3> weights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

using TensorField = std::vector<ElasticTensor2D>;

/// Q2 degrees of freedom on a QuadMesh with Dirichlet and hanging-node constraints eliminated.
///
/// Every node component is expressed as an affine combination of free dofs (its expansion).
/// Element-indexed data throughout the FE layer use the leaf index of QuadMesh.
class Discretization {
 public:
  struct Term {
    int dof;
    double weight;
  };
  struct Expansion {
    std::vector<Term> terms;
    double offset = 0.0;
  };

  Discretization(QuadMesh mesh, Scenario scenario);

  const QuadMesh& mesh() const { return mesh_; }
  const Scenario& scenario() const { return scenario_; }
  std::size_t num_elements() const { return mesh_.num_leaves(); }
  std::size_t num_nodes() const { return node_keys_.size(); }
  int num_dofs() const { return num_dofs_; }

  const std::array<int, 9>& element_nodes(std::size_t e) const { return element_nodes_[e]; }
  int element_id(std::size_t e) const { return mesh_.leaves()[e]; }
  const Element& element(std::size_t e) const { return mesh_.element(element_id(e)); }
  Vec2 node_point(int n) const { return node_keys_[n].point(); }
  int node_index(const NodeKey& k) const;

  const Expansion& expansion(int node, int comp) const { return expansions_[2 * node + comp]; }
  bool is_hanging(int node) const { return hanging_[node]; }
  bool is_fixed(int node, int comp) const { return fixed_[2 * node + comp]; }

  /// Physical point of reference coordinates (xi, eta) on element e.
  Vec2 map(std::size_t e, double xi, double eta) const;
  /// Reference coordinates of a physical point on element e.
  Vec2 local(std::size_t e, const Vec2& p) const;

  /// Surface traction at a boundary point (zero away from load segments).
  Vec2 traction_at(const Vec2& p) const;
  /// Dirichlet mask at a boundary point: which components are prescribed.
  std::array<bool, 2> fixed_at(const Vec2& p) const;

  /// Breakpoints in [0,1] splitting the boundary piece p0 -> p1 at load/support segment ends.
  std::vector<double> boundary_breaks(const Vec2& p0, const Vec2& p1) const;

 private:
  QuadMesh mesh_;
  Scenario scenario_;
  std::vector<NodeKey> node_keys_;
  std::vector<std::array<int, 9>> element_nodes_;
  std::vector<Expansion> expansions_;
  std::vector<bool> hanging_;
  std::vector<bool> fixed_;
  int num_dofs_ = 0;
};

/// Q2 vector field stored by its values at all nodes, constrained ones included.
class DisplacementField {
 public:
  DisplacementField() = default;
  explicit DisplacementField(std::shared_ptr<const Discretization> disc);

  static DisplacementField from_dofs(std::shared_ptr<const Discretization> disc, const Eigen::VectorXd& dofs);
  /// Interpolates f at the nodes; hanging and Dirichlet nodes are then reset to their constraints.
  template <class F>
  static DisplacementField interpolate(std::shared_ptr<const Discretization> disc, F&& f, bool constrain = true);

  const Discretization& discretization() const { return *disc_; }
  const std::shared_ptr<const Discretization>& discretization_ptr() const { return disc_; }
  const Eigen::VectorXd& nodal() const { return nodal_; }
  Eigen::VectorXd& nodal() { return nodal_; }

  /// Free dof vector (meaningful only for fields in the constrained space).
  Eigen::VectorXd dofs() const;
  /// Re-imposes hanging and Dirichlet constraints from the free dofs.
  void apply_constraints();
  /// Max violation of hanging/Dirichlet constraint equations.
  double constraint_violation() const;

  Vec2 value(std::size_t e, double xi, double eta) const;
  /// Physical displacement gradient (row = component, col = derivative direction).
  Mat2 gradient(std::size_t e, double xi, double eta) const;
  Sym2 strain(std::size_t e, double xi, double eta) const { return Sym2::strain_of(gradient(e, xi, eta)); }
  /// Physical second derivatives of component c: (u_c,xx, u_c,yy, u_c,xy).
  std::array<Eigen::Vector3d, 2> hessian(std::size_t e, double xi, double eta) const;
  /// Value at a physical point (located through the mesh).
  Vec2 value_at(const Vec2& p) const;

  DisplacementField operator+(const DisplacementField& o) const;
  DisplacementField operator-(const DisplacementField& o) const;
  DisplacementField operator*(double s) const;

 private:
  std::shared_ptr<const Discretization> disc_;
  Eigen::VectorXd nodal_;
};

struct SolveReport {
  double relative_residual = 0.0;
  int refinement_steps = 0;
};

/// Galerkin solution of a(C; u, phi) = l(phi) in the constrained Q2 space.
/// Throws SolverError on a singular or inaccurate solve.
DisplacementField assemble_and_solve(std::shared_ptr<const Discretization> disc, const TensorField& tensors,
                                     SolveReport* report = nullptr);

/// Global stiffness matrix on the free dofs and the matching load vector (Dirichlet lifting included).
struct LinearSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};
LinearSystem assemble(const Discretization& disc, const TensorField& tensors);

/// Element stiffness for a constant tensor (18x18, local dof 2*node + component).
Eigen::Matrix<double, 18, 18> element_stiffness(const ElasticTensor2D& c);

/// l(u): work of the surface loads, integrated on the load segments.
double compliance(const DisplacementField& u);
/// a(C; u, v) by 3x3 Gauss quadrature per element.
double bilinear(const TensorField& tensors, const DisplacementField& u, const DisplacementField& v);
/// Elementwise integrals of eps(u) (x) eps(u) as Voigt outer products (engineering shear).
std::vector<Eigen::Matrix3d> strain_moments(const DisplacementField& u);
/// Element-mean strain.
std::vector<Sym2> mean_strains(const DisplacementField& u);

/// div(C eps(u)) at a reference point of element e, from Q2 second derivatives.
Vec2 element_residual(const DisplacementField& u, const ElasticTensor2D& c, std::size_t e, double xi, double eta);

/// Stress C_e eps(u) at a physical point of element e.
Sym2 stress_at(const DisplacementField& u, const TensorField& tensors, std::size_t e, const Vec2& p);

/// Jump functional j(sigma) on side `side` of element e at parameter s in [0,1] along
/// QuadMesh::side_points: 1/2 (sigma_e - sigma_e') nu inside, sigma nu - g on free/loaded
/// boundary, 0 on prescribed components.
Vec2 edge_jump(const DisplacementField& u, const TensorField& tensors, std::size_t e, Side side, double s);

/// Plane von Mises stress of C eps(u) at each element center.
std::vector<double> von_mises(const DisplacementField& u, const TensorField& tensors);
double von_mises(const Sym2& sigma);

// ---------------------------------------------------------------------------

template <class F>
DisplacementField DisplacementField::interpolate(std::shared_ptr<const Discretization> disc, F&& f, bool constrain) {
  DisplacementField u(disc);
  for (std::size_t n = 0; n < disc->num_nodes(); ++n) {
    const Vec2 v = f(disc->node_point(static_cast<int>(n)));
    u.nodal_(2 * n) = v.x();
    u.nodal_(2 * n + 1) = v.y();
  }
  if (constrain) u.apply_constraints();
  return u;
}

}  // namespace twoscale
