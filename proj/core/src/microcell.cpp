#include "twoscale/microcell.hpp"

#include "twoscale/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace twoscale {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat38 = Eigen::Matrix<double, 3, 8>;

// Local Q1 nodes: (0,0), (1,0), (0,1), (1,1).
Mat38 q1_b(double x, double y) {
  const double gx[4] = {-(1 - y), 1 - y, -y, y};
  const double gy[4] = {-(1 - x), -x, 1 - x, x};
  Mat38 b = Mat38::Zero();
  for (int n = 0; n < 4; ++n) {
    b(0, 2 * n) = gx[n];
    b(1, 2 * n + 1) = gy[n];
    b(2, 2 * n) = gy[n];
    b(2, 2 * n + 1) = gx[n];
  }
  return b;
}

constexpr double kG0 = 0.21132486540518713, kG1 = 0.78867513459481287;
constexpr std::array<double, 2> kGauss{kG0, kG1};

Mat8 q1_stiffness(const Eigen::Matrix3d& d) {
  Mat8 k = Mat8::Zero();
  for (double x : kGauss)
    for (double y : kGauss) {
      const Mat38 b = q1_b(x, y);
      k += 0.25 * b.transpose() * d * b;
    }
  return k;
}

Mat38 q1_mean_b() {
  Mat38 g = Mat38::Zero();
  for (double x : kGauss)
    for (double y : kGauss) g += 0.25 * q1_b(x, y);
  return g;
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

// Unit strains in engineering Voigt form.
const std::array<Eigen::Vector3d, 3> kUnit{Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(0, 0, 1)};

ElasticTensor2D swap_axes(const ElasticTensor2D& c) {
  return {c.c2222, c.c1111, c.c1122, c.c1212, -c.c2212, -c.c1112};
}

// Sparsity pattern, element-to-value slots and symbolic factorization of the pinned periodic
// system; one per resolution and thread.
struct CellWorkspace {
  Eigen::SparseMatrix<double> matrix;  // lower triangle of the reduced matrix
  std::vector<std::array<int, 8>> dofs;
  std::vector<int> slots;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt;
};

CellWorkspace& workspace(int n) {
  thread_local std::map<int, std::unique_ptr<CellWorkspace>> cache;
  auto& ptr = cache[n];
  if (ptr) return *ptr;
  ptr = std::make_unique<CellWorkspace>();
  CellWorkspace& ws = *ptr;
  const int ndof = 2 * n * n;
  auto node = [n](int i, int j) { return ((j + n) % n) * n + (i + n) % n; };
  ws.dofs.resize(static_cast<std::size_t>(n) * n);
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int nodes[4] = {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
      auto& ld = ws.dofs[j * n + i];
      for (int a = 0; a < 4; ++a) ld[2 * a] = 2 * nodes[a], ld[2 * a + 1] = 2 * nodes[a] + 1;
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          if (ld[a] >= 2 && ld[b] >= 2 && ld[a] >= ld[b]) trip.emplace_back(ld[a] - 2, ld[b] - 2, 1.0);
    }
  ws.matrix.resize(ndof - 2, ndof - 2);
  ws.matrix.setFromTriplets(trip.begin(), trip.end());
  ws.matrix.makeCompressed();
  ws.slots.assign(static_cast<std::size_t>(n) * n * 64, -1);
  for (int e = 0; e < n * n; ++e)
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const int r = ws.dofs[e][a] - 2, c = ws.dofs[e][b] - 2;
        if (r < 0 || c < 0 || r < c) continue;
        // Column-major: search row r in column c.
        const int* inner = ws.matrix.innerIndexPtr();
        const int begin = ws.matrix.outerIndexPtr()[c], end = ws.matrix.outerIndexPtr()[c + 1];
        const int* pos = std::lower_bound(inner + begin, inner + end, r);
        ws.slots[static_cast<std::size_t>(e) * 64 + 8 * a + b] = static_cast<int>(pos - inner);
      }
  ws.llt.analyzePattern(ws.matrix);
  return ws;
}

}  // namespace

CellSolution solve_cell(double d1, double d2, const CellMaterials& materials, int n) {
  if (n < 2) throw std::invalid_argument("cell resolution must be at least 2");
  if (!(d1 >= 0.0 && d1 <= 1.0 && d2 >= 0.0 && d2 <= 1.0))
    throw std::invalid_argument("cell widths must lie in [0,1]");
  const Eigen::Matrix3d da = ElasticTensor2D::isotropic(materials.hard).voigt();
  const Eigen::Matrix3d db = ElasticTensor2D::isotropic(materials.soft()).voigt();
  const double h = 1.0 / n;
  const double hx0 = 0.5 * d1, hx1 = 1.0 - 0.5 * d1, hy0 = 0.5 * d2, hy1 = 1.0 - 0.5 * d2;

  // Hard-area fraction per grid cell.
  std::vector<double> frac(static_cast<std::size_t>(n) * n);
  bool any_soft = false;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double hole = overlap(i * h, (i + 1) * h, hx0, hx1) * overlap(j * h, (j + 1) * h, hy0, hy1) / (h * h);
      frac[j * n + i] = std::clamp(1.0 - hole, 0.0, 1.0);
      any_soft = any_soft || frac[j * n + i] < 1.0;
    }
  if (any_soft && !(materials.soft_ratio > 0.0))
    throw SolverError("cell problem is singular: the weak phase must not be void");

  const Mat8 ka = q1_stiffness(da), kb = q1_stiffness(db);
  const Mat38 g = q1_mean_b();
  const int ndof = 2 * n * n;
  CellWorkspace& ws = workspace(n);

  // Translations span the kernel; node 0 is pinned and zero mean restored afterwards.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ndof, 3);
  double* values = ws.matrix.valuePtr();
  std::fill(values, values + ws.matrix.nonZeros(), 0.0);
  for (int e = 0; e < n * n; ++e) {
    const double f = frac[e];
    const Mat8 k = f * ka + (1.0 - f) * kb;
    const Eigen::Matrix3d d = f * da + (1.0 - f) * db;
    const auto& ld = ws.dofs[e];
    const int* slot = &ws.slots[static_cast<std::size_t>(e) * 64];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        if (slot[8 * a + b] >= 0) values[slot[8 * a + b]] += k(a, b);
    for (int c = 0; c < 3; ++c) {
      const Eigen::Matrix<double, 8, 1> fe = -h * g.transpose() * d * kUnit[c];
      for (int a = 0; a < 8; ++a) rhs(ld[a], c) += fe(a);
    }
  }
  ws.llt.factorize(ws.matrix);
  if (ws.llt.info() != Eigen::Success) throw SolverError("cell stiffness factorization failed");

  CellSolution sol;
  sol.n = n;
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd b = rhs.col(c).tail(ndof - 2);
    Eigen::VectorXd wr = ws.llt.solve(b);
    Eigen::VectorXd r = b - ws.matrix.selfadjointView<Eigen::Lower>() * wr;
    const double scale = std::max(b.norm(), (b - r).norm());
    double rel = scale > 0.0 ? r.norm() / scale : 0.0;
    if (rel > 1e-13) {
      wr += ws.llt.solve(r);
      r = b - ws.matrix.selfadjointView<Eigen::Lower>() * wr;
      rel = scale > 0.0 ? r.norm() / scale : 0.0;
    }
    if (!(rel <= 1e-10)) throw SolverError("cell solve residual too large", rel);
    sol.max_relative_residual = std::max(sol.max_relative_residual, rel);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(ndof);
    w.tail(ndof - 2) = wr;
    for (int comp = 0; comp < 2; ++comp) {
      double mean = 0.0;
      for (int p = comp; p < ndof; p += 2) mean += w(p);
      mean /= n * n;
      for (int p = comp; p < ndof; p += 2) w(p) -= mean;
    }
    sol.correctors[c] = std::move(w);
  }

  // D*_ab = integral of (xi_a + eps(w_a)) . D (xi_b + eps(w_b)).
  Eigen::Matrix3d dstar = Eigen::Matrix3d::Zero();
  for (int e = 0; e < n * n; ++e) {
    const double f = frac[e];
    const Eigen::Matrix3d d = f * da + (1.0 - f) * db;
    std::array<Eigen::Matrix<double, 8, 1>, 3> we;
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 8; ++a) we[c](a) = sol.correctors[c](ws.dofs[e][a]);
    for (double x : kGauss)
      for (double y : kGauss) {
        const Mat38 b = q1_b(x, y);
        Eigen::Matrix3d s;
        for (int c = 0; c < 3; ++c) s.col(c) = kUnit[c] + b * we[c] / h;
        dstar += 0.25 * h * h * s.transpose() * d * s;
      }
  }
  sol.tensor = ElasticTensor2D::from_voigt(0.5 * (dstar + dstar.transpose()));
  return sol;
}

double corrector_energy(const CellSolution& s, const Sym2& xi) { return s.tensor.energy(xi); }

ElasticTensor2D effective_tensor(const MicroParams& q, const CellMaterials& materials, int n) {
  return solve_cell(q.delta1, q.delta2, materials, n).tensor.rotated(q.alpha);
}

TensorSensitivities CellModel::sensitivities(const MicroParams& q) const {
  const ElasticTensor2D c = aligned(q.delta1, q.delta2);
  const auto grad = aligned_gradient(q.delta1, q.delta2);
  return {c.rotated(q.alpha), c.rotation_derivative(q.alpha), grad[0].rotated(q.alpha), grad[1].rotated(q.alpha)};
}

// ---------------------------------------------------------------------------

ElasticTensor2D DirectCellModel::aligned(double d1, double d2) const {
  const auto key = std::make_pair(d1, d2);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const ElasticTensor2D c = solve_cell(d1, d2, materials_, n_).tensor;
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(key, c);
  return c;
}

std::array<ElasticTensor2D, 2> DirectCellModel::aligned_gradient(double d1, double d2) const {
  auto diff = [&](double v, auto&& eval) {
    const double lo = std::max(v - step_, std::min(v, kDeltaMin));
    const double hi = std::min(v + step_, std::max(v, kDeltaMax));
    return (eval(hi) - eval(lo)) * (1.0 / (hi - lo));
  };
  return {diff(d1, [&](double x) { return aligned(x, d2); }), diff(d2, [&](double x) { return aligned(d1, x); })};
}

std::size_t DirectCellModel::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

// ---------------------------------------------------------------------------

TabulatedCellModel::TabulatedCellModel(CellMaterials materials, int n, int degree) : degree_(degree) {
  if (degree < 1) throw std::invalid_argument("cell table degree must be at least 1");
  for (int k = 0; 2 * k < n; ++k) breaks_.push_back(2.0 * k / n);
  breaks_.push_back(1.0);
  for (std::size_t s = 0; s + 1 < breaks_.size(); ++s)
    for (int p = 0; p < degree; ++p) nodes_.push_back(breaks_[s] + (breaks_[s + 1] - breaks_[s]) * p / degree);
  nodes_.push_back(1.0);
  const std::size_t m = nodes_.size();
  table_.resize(m * m);
  // The cell for (d2, d1) is the quarter-turned cell for (d1, d2).
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      const ElasticTensor2D c = solve_cell(nodes_[i], nodes_[j], materials, n).tensor;
      table_[j * m + i] = c;
      table_[i * m + j] = i == j ? c : swap_axes(c);
    }
}

namespace {

// Lagrange weights (or their derivatives) on equispaced nodes 0, 1/p, ..., 1.
std::vector<double> lagrange(double t, int p, int derivative) {
  std::vector<double> w(static_cast<std::size_t>(p + 1));
  for (int a = 0; a <= p; ++a) {
    const double ta = static_cast<double>(a) / p;
    if (derivative == 0) {
      double v = 1.0;
      for (int b = 0; b <= p; ++b)
        if (b != a) v *= (t - static_cast<double>(b) / p) / (ta - static_cast<double>(b) / p);
      w[a] = v;
    } else {
      double sum = 0.0;
      for (int c = 0; c <= p; ++c) {
        if (c == a) continue;
        double v = 1.0 / (ta - static_cast<double>(c) / p);
        for (int b = 0; b <= p; ++b)
          if (b != a && b != c) v *= (t - static_cast<double>(b) / p) / (ta - static_cast<double>(b) / p);
        sum += v;
      }
      w[a] = sum;
    }
  }
  return w;
}

}  // namespace

ElasticTensor2D TabulatedCellModel::evaluate(double d1, double d2, int dx, int dy) const {
  if (!(d1 >= 0.0 && d1 <= 1.0 && d2 >= 0.0 && d2 <= 1.0))
    throw std::invalid_argument("cell widths must lie in [0,1]");
  // Interval containing v; a point on a break belongs to the interval above it.
  auto locate = [&](double v, std::size_t& first, std::vector<double>& w, int derivative) {
    std::size_t s = static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), v) - breaks_.begin());
    s = std::clamp<std::size_t>(s, 1, breaks_.size() - 1) - 1;
    const double len = breaks_[s + 1] - breaks_[s];
    w = lagrange((v - breaks_[s]) / len, degree_, derivative);
    if (derivative)
      for (auto& x : w) x /= len;
    first = s * static_cast<std::size_t>(degree_);
  };
  std::size_t i0 = 0, j0 = 0;
  std::vector<double> wx, wy;
  locate(d1, i0, wx, dx);
  locate(d2, j0, wy, dy);
  ElasticTensor2D out = ElasticTensor2D::zero();
  for (std::size_t b = 0; b < wy.size(); ++b)
    for (std::size_t a = 0; a < wx.size(); ++a) out += node(i0 + a, j0 + b) * (wx[a] * wy[b]);
  return out;
}

ElasticTensor2D TabulatedCellModel::aligned(double d1, double d2) const { return evaluate(d1, d2, 0, 0); }

std::array<ElasticTensor2D, 2> TabulatedCellModel::aligned_gradient(double d1, double d2) const {
  return {evaluate(d1, d2, 1, 0), evaluate(d1, d2, 0, 1)};
}

void write_cell_database(std::ostream& os, const CellModel& model, int samples) {
  os << "delta1,delta2,c1111,c2222,c1122,c1212,c1112,c2212\n";
  os.precision(12);
  for (int j = 0; j < samples; ++j)
    for (int i = 0; i < samples; ++i) {
      const double d1 = kDeltaMin + (kDeltaMax - kDeltaMin) * i / std::max(1, samples - 1);
      const double d2 = kDeltaMin + (kDeltaMax - kDeltaMin) * j / std::max(1, samples - 1);
      const auto e = model.aligned(d1, d2).entries();
      os << d1 << ',' << d2;
      for (double v : e) os << ',' << v;
      os << '\n';
    }
}

}  // namespace twoscale
