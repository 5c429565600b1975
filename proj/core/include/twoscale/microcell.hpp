#pragma once

#include "twoscale/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <iosfwd>
#include <vector>

namespace twoscale {

inline constexpr double kDeltaMin = 0.01;
inline constexpr double kDeltaMax = 0.99;

/// Truss cell parameters: rotation alpha and relative bar widths.
struct MicroParams {
  double alpha = 0.0;
  double delta1 = 0.5;
  double delta2 = 0.5;
};

/// Hard-phase area fraction of the cross, delta1 + delta2 - delta1 delta2.
inline double density(double d1, double d2) { return d1 + d2 - d1 * d2; }
inline double density(const MicroParams& q) { return density(q.delta1, q.delta2); }

/// Hard material A and the weak filling B = soft_ratio * A.
struct CellMaterials {
  IsotropicMaterial hard{};
  double soft_ratio = 1e-4;

  IsotropicMaterial soft() const { return hard.scaled(soft_ratio); }
};

/// Periodic correctors for the unit strains e11, e22 and e12 (engineering shear 1) on an n x n
/// grid over the shifted cell. Node (i, j) holds w at (i/n, j/n); index 2*(j*n + i) + component.
struct CellSolution {
  int n = 0;
  std::array<Eigen::VectorXd, 3> correctors;
  /// Axis-aligned effective tensor.
  ElasticTensor2D tensor;
  double max_relative_residual = 0.0;
};

/// Periodic Q1 solve of the cell problem for the axis-aligned cross; the hole
/// [d1/2, 1-d1/2] x [d2/2, 1-d2/2] is filled with B. Grid cells cut by the hole boundary get the
/// exact hard-area fraction of A mixed with B.
CellSolution solve_cell(double d1, double d2, const CellMaterials& materials, int n);

/// Corrector energy C* xi : xi for a unit strain combination, from a cell solution.
double corrector_energy(const CellSolution& s, const Sym2& xi);

/// Effective tensor of the rotated cross (no caching).
ElasticTensor2D effective_tensor(const MicroParams& q, const CellMaterials& materials, int n);

/// Effective tensor and its parameter derivatives.
struct TensorSensitivities {
  ElasticTensor2D value;
  ElasticTensor2D d_alpha;
  ElasticTensor2D d_delta1;
  ElasticTensor2D d_delta2;
};

/// Source of axis-aligned effective tensors; rotation is applied on top.
class CellModel {
 public:
  virtual ~CellModel() = default;
  virtual ElasticTensor2D aligned(double d1, double d2) const = 0;
  /// Derivatives of aligned() with respect to delta1 and delta2.
  virtual std::array<ElasticTensor2D, 2> aligned_gradient(double d1, double d2) const = 0;

  ElasticTensor2D tensor(const MicroParams& q) const { return aligned(q.delta1, q.delta2).rotated(q.alpha); }
  TensorSensitivities sensitivities(const MicroParams& q) const;
};

/// Solves cells on demand. Results are memoized by exact (delta1, delta2); derivatives by central
/// differences with step h, one-sided where the box is hit. Safe for concurrent use.
class DirectCellModel : public CellModel {
 public:
  DirectCellModel(CellMaterials materials, int n, double fd_step = 1e-3)
      : materials_(materials), n_(n), step_(fd_step) {}

  ElasticTensor2D aligned(double d1, double d2) const override;
  std::array<ElasticTensor2D, 2> aligned_gradient(double d1, double d2) const override;

  int resolution() const { return n_; }
  std::size_t cache_size() const;

 private:
  CellMaterials materials_;
  int n_;
  double step_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<double, double>, ElasticTensor2D> cache_;
};

/// Cell tensors tabulated on a tensor grid aligned with the micro grid: the hole edges cross
/// micro grid lines at delta = 2k/n, where the effective tensor has slope kinks, so each interval
/// between crossings carries its own tensor-product Lagrange polynomial of the given degree.
/// Derivatives are exact derivatives of the interpolant.
class TabulatedCellModel : public CellModel {
 public:
  TabulatedCellModel(CellMaterials materials, int n, int degree = 3);

  ElasticTensor2D aligned(double d1, double d2) const override;
  std::array<ElasticTensor2D, 2> aligned_gradient(double d1, double d2) const override;

  const std::vector<double>& nodes() const { return nodes_; }
  const ElasticTensor2D& node(std::size_t i, std::size_t j) const { return table_[j * nodes_.size() + i]; }

 private:
  ElasticTensor2D evaluate(double d1, double d2, int dx, int dy) const;

  int degree_;
  std::vector<double> breaks_;
  std::vector<double> nodes_;
  std::vector<ElasticTensor2D> table_;
};

/// CSV rows: delta1, delta2, c1111, c2222, c1122, c1212, c1112, c2212.
void write_cell_database(std::ostream& os, const CellModel& model, int samples);

}  // namespace twoscale
