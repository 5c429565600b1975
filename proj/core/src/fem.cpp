#include "twoscale/fem.hpp"

#include "twoscale/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace twoscale {

namespace q2 {

namespace {
inline std::array<double, 3> l(double t) { return {2 * t * t - 3 * t + 1, -4 * t * t + 4 * t, 2 * t * t - t}; }
inline std::array<double, 3> dl(double t) { return {4 * t - 3, -8 * t + 4, 4 * t - 1}; }
constexpr std::array<double, 3> kD2{4.0, -8.0, 4.0};
}  // namespace

std::array<double, 9> values(double xi, double eta) {
  const auto a = l(xi), b = l(eta);
  std::array<double, 9> v{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) v[3 * j + i] = a[i] * b[j];
  return v;
}

std::array<Vec2, 9> gradients(double xi, double eta) {
  const auto a = l(xi), b = l(eta), da = dl(xi), db = dl(eta);
  std::array<Vec2, 9> g;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) g[3 * j + i] = Vec2(da[i] * b[j], a[i] * db[j]);
  return g;
}

std::array<Eigen::Vector3d, 9> hessians(double xi, double eta) {
  const auto a = l(xi), b = l(eta), da = dl(xi), db = dl(eta);
  std::array<Eigen::Vector3d, 9> h;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) h[3 * j + i] = Eigen::Vector3d(kD2[i] * b[j], a[i] * kD2[j], da[i] * db[j]);
  return h;
}

}  // namespace q2

namespace {

constexpr double kGeomTol = 1e-12;

Eigen::Vector2d outward_normal(Side s) {
  switch (s) {
    case Side::left: return {-1, 0};
    case Side::right: return {1, 0};
    case Side::bottom: return {0, -1};
    case Side::top: return {0, 1};
  }
  return {0, 0};
}

// Strain-displacement matrix in reference coordinates (engineering shear).
Eigen::Matrix<double, 3, 18> reference_b(double xi, double eta) {
  const auto g = q2::gradients(xi, eta);
  Eigen::Matrix<double, 3, 18> b = Eigen::Matrix<double, 3, 18>::Zero();
  for (int n = 0; n < 9; ++n) {
    b(0, 2 * n) = g[n].x();
    b(1, 2 * n + 1) = g[n].y();
    b(2, 2 * n) = g[n].y();
    b(2, 2 * n + 1) = g[n].x();
  }
  return b;
}

// Element stiffness is linear in the six tensor entries and independent of the element size.
const std::array<Eigen::Matrix<double, 18, 18>, 6>& stiffness_basis() {
  static const auto basis = [] {
    std::array<Eigen::Matrix3d, 6> unit;
    for (auto& u : unit) u.setZero();
    unit[0](0, 0) = 1;
    unit[1](1, 1) = 1;
    unit[2](0, 1) = unit[2](1, 0) = 1;
    unit[3](2, 2) = 1;
    unit[4](0, 2) = unit[4](2, 0) = 1;
    unit[5](1, 2) = unit[5](2, 1) = 1;
    std::array<Eigen::Matrix<double, 18, 18>, 6> k;
    for (auto& m : k) m.setZero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const auto bm = reference_b(Gauss3::points[a], Gauss3::points[b]);
        const double w = Gauss3::weights[a] * Gauss3::weights[b];
        for (int c = 0; c < 6; ++c) k[c] += w * bm.transpose() * unit[c] * bm;
      }
    return k;
  }();
  return basis;
}

Eigen::Matrix<double, 18, 1> local_values(const DisplacementField& u, std::size_t e) {
  const auto& nodes = u.discretization().element_nodes(e);
  Eigen::Matrix<double, 18, 1> v;
  for (int n = 0; n < 9; ++n) {
    v(2 * n) = u.nodal()(2 * nodes[n]);
    v(2 * n + 1) = u.nodal()(2 * nodes[n] + 1);
  }
  return v;
}

Sym2 strain_from_voigt(const Eigen::Vector3d& v) { return {v(0), v(1), 0.5 * v(2)}; }

}  // namespace

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(QuadMesh mesh, Scenario scenario)
    : mesh_(std::move(mesh)), scenario_(std::move(scenario)) {
  std::unordered_map<NodeKey, int, NodeKeyHash> index;
  element_nodes_.resize(mesh_.num_leaves());
  for (std::size_t e = 0; e < mesh_.num_leaves(); ++e) {
    const auto keys = mesh_.q2_nodes(mesh_.leaves()[e]);
    for (int n = 0; n < 9; ++n) {
      auto [it, fresh] = index.emplace(keys[n], static_cast<int>(node_keys_.size()));
      if (fresh) node_keys_.push_back(keys[n]);
      element_nodes_[e][n] = it->second;
    }
  }
  const std::size_t nn = node_keys_.size();
  hanging_.assign(nn, false);
  fixed_.assign(2 * nn, false);
  expansions_.assign(2 * nn, {});

  std::unordered_map<int, HangingConstraint> constraints;
  for (const auto& c : mesh_.hanging_constraints()) {
    const int n = index.at(c.node);
    hanging_[n] = true;
    constraints.emplace(n, c);
  }

  for (std::size_t n = 0; n < nn; ++n) {
    if (hanging_[n]) continue;
    const Vec2 p = node_keys_[n].point();
    std::array<bool, 2> fixed{false, false};
    Vec2 value = Vec2::Zero();
    for (const auto& d : scenario_.dirichlet) {
      if (!d.segment.contains(p, kGeomTol)) continue;
      if (d.fix_x) fixed[0] = true, value.x() = d.value.x();
      if (d.fix_y) fixed[1] = true, value.y() = d.value.y();
    }
    for (int c = 0; c < 2; ++c) {
      auto& ex = expansions_[2 * n + c];
      if (fixed[c]) {
        fixed_[2 * n + c] = true;
        ex.offset = value(c);
      } else {
        ex.terms.push_back({num_dofs_++, 1.0});
      }
    }
  }

  // Hanging nodes: combine master expansions; masters may themselves hang.
  std::vector<int> state(nn, 0);
  std::function<void(int)> resolve = [&](int n) {
    if (!hanging_[n] || state[n] == 2) return;
    if (state[n] == 1) throw SolverError("cyclic hanging-node constraints");
    state[n] = 1;
    const auto& c = constraints.at(n);
    for (int comp = 0; comp < 2; ++comp) {
      std::unordered_map<int, double> acc;
      double offset = 0.0;
      for (int m = 0; m < 3; ++m) {
        const int mn = index.at(c.masters[m]);
        resolve(mn);
        const auto& mex = expansions_[2 * mn + comp];
        for (const auto& t : mex.terms) acc[t.dof] += c.weights[m] * t.weight;
        offset += c.weights[m] * mex.offset;
      }
      auto& ex = expansions_[2 * n + comp];
      ex.offset = offset;
      for (const auto& [dof, w] : acc)
        if (w != 0.0) ex.terms.push_back({dof, w});
      std::sort(ex.terms.begin(), ex.terms.end(), [](const Term& a, const Term& b) { return a.dof < b.dof; });
    }
    state[n] = 2;
  };
  for (std::size_t n = 0; n < nn; ++n) resolve(static_cast<int>(n));
}

int Discretization::node_index(const NodeKey& k) const {
  for (std::size_t n = 0; n < node_keys_.size(); ++n)
    if (node_keys_[n] == k) return static_cast<int>(n);
  return -1;
}

Vec2 Discretization::map(std::size_t e, double xi, double eta) const {
  const Element& el = element(e);
  return el.lower_left() + el.size() * Vec2(xi, eta);
}

Vec2 Discretization::local(std::size_t e, const Vec2& p) const {
  const Element& el = element(e);
  return (p - el.lower_left()) / el.size();
}

Vec2 Discretization::traction_at(const Vec2& p) const {
  Vec2 g = Vec2::Zero();
  for (const auto& l : scenario_.loads)
    if (l.segment.contains(p, kGeomTol)) g += l.traction;
  return g;
}

std::array<bool, 2> Discretization::fixed_at(const Vec2& p) const {
  std::array<bool, 2> f{false, false};
  for (const auto& d : scenario_.dirichlet)
    if (d.segment.contains(p, kGeomTol)) {
      f[0] = f[0] || d.fix_x;
      f[1] = f[1] || d.fix_y;
    }
  return f;
}

std::vector<double> Discretization::boundary_breaks(const Vec2& p0, const Vec2& p1) const {
  std::vector<double> t{0.0, 1.0};
  const Vec2 d = p1 - p0;
  const double len2 = d.squaredNorm();
  auto add = [&](const Vec2& q) {
    const Vec2 r = q - p0;
    if (std::abs(r.x() * d.y() - r.y() * d.x()) > kGeomTol * std::sqrt(len2)) return;
    const double s = r.dot(d) / len2;
    if (s > kGeomTol && s < 1.0 - kGeomTol) t.push_back(s);
  };
  for (const auto& l : scenario_.loads) add(l.segment.a), add(l.segment.b);
  for (const auto& s : scenario_.dirichlet) add(s.segment.a), add(s.segment.b);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// ---------------------------------------------------------------------------
// DisplacementField

DisplacementField::DisplacementField(std::shared_ptr<const Discretization> disc)
    : disc_(std::move(disc)), nodal_(Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(disc_->num_nodes()))) {}

DisplacementField DisplacementField::from_dofs(std::shared_ptr<const Discretization> disc, const Eigen::VectorXd& x) {
  if (x.size() != disc->num_dofs()) throw std::invalid_argument("dof vector has the wrong size");
  DisplacementField u(disc);
  for (std::size_t n = 0; n < disc->num_nodes(); ++n)
    for (int c = 0; c < 2; ++c) {
      const auto& ex = disc->expansion(static_cast<int>(n), c);
      double v = ex.offset;
      for (const auto& t : ex.terms) v += t.weight * x(t.dof);
      u.nodal_(2 * n + c) = v;
    }
  return u;
}

Eigen::VectorXd DisplacementField::dofs() const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(disc_->num_dofs());
  for (std::size_t n = 0; n < disc_->num_nodes(); ++n) {
    if (disc_->is_hanging(static_cast<int>(n))) continue;
    for (int c = 0; c < 2; ++c) {
      const auto& ex = disc_->expansion(static_cast<int>(n), c);
      if (ex.terms.size() == 1) x(ex.terms[0].dof) = nodal_(2 * n + c);
    }
  }
  return x;
}

void DisplacementField::apply_constraints() { *this = from_dofs(disc_, dofs()); }

double DisplacementField::constraint_violation() const {
  const DisplacementField c = from_dofs(disc_, dofs());
  return (c.nodal_ - nodal_).lpNorm<Eigen::Infinity>();
}

Vec2 DisplacementField::value(std::size_t e, double xi, double eta) const {
  const auto phi = q2::values(xi, eta);
  const auto& nodes = disc_->element_nodes(e);
  Vec2 v = Vec2::Zero();
  for (int n = 0; n < 9; ++n) v += phi[n] * Vec2(nodal_(2 * nodes[n]), nodal_(2 * nodes[n] + 1));
  return v;
}

Mat2 DisplacementField::gradient(std::size_t e, double xi, double eta) const {
  const auto g = q2::gradients(xi, eta);
  const auto& nodes = disc_->element_nodes(e);
  Mat2 m = Mat2::Zero();
  for (int n = 0; n < 9; ++n) {
    m.row(0) += nodal_(2 * nodes[n]) * g[n].transpose();
    m.row(1) += nodal_(2 * nodes[n] + 1) * g[n].transpose();
  }
  return m / disc_->element(e).size();
}

std::array<Eigen::Vector3d, 2> DisplacementField::hessian(std::size_t e, double xi, double eta) const {
  const auto h = q2::hessians(xi, eta);
  const auto& nodes = disc_->element_nodes(e);
  std::array<Eigen::Vector3d, 2> out{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  for (int n = 0; n < 9; ++n)
    for (int c = 0; c < 2; ++c) out[c] += nodal_(2 * nodes[n] + c) * h[n];
  const double s = disc_->element(e).size();
  for (auto& v : out) v /= s * s;
  return out;
}

Vec2 DisplacementField::value_at(const Vec2& p) const {
  const int id = disc_->mesh().locate(p);
  if (id < 0) throw std::out_of_range("point outside the domain");
  const auto e = static_cast<std::size_t>(disc_->mesh().leaf_index(id));
  const Vec2 r = disc_->local(e, p);
  return value(e, r.x(), r.y());
}

DisplacementField DisplacementField::operator+(const DisplacementField& o) const {
  DisplacementField r = *this;
  r.nodal_ += o.nodal_;
  return r;
}

DisplacementField DisplacementField::operator-(const DisplacementField& o) const {
  DisplacementField r = *this;
  r.nodal_ -= o.nodal_;
  return r;
}

DisplacementField DisplacementField::operator*(double s) const {
  DisplacementField r = *this;
  r.nodal_ *= s;
  return r;
}

// ---------------------------------------------------------------------------
// Assembly and solve

Eigen::Matrix<double, 18, 18> element_stiffness(const ElasticTensor2D& c) {
  const auto& k = stiffness_basis();
  const auto e = c.entries();
  Eigen::Matrix<double, 18, 18> m = e[0] * k[0];
  for (int i = 1; i < 6; ++i) m += e[i] * k[i];
  return m;
}

namespace {

// Consistent load vector of one element (local dof order), loads on its boundary sides.
Eigen::Matrix<double, 18, 1> element_load(const Discretization& disc, std::size_t e) {
  Eigen::Matrix<double, 18, 1> f = Eigen::Matrix<double, 18, 1>::Zero();
  const int id = disc.element_id(e);
  for (int s = 0; s < 4; ++s) {
    const Side side = static_cast<Side>(s);
    if (disc.mesh().neighbor(id, side).kind != Neighbor::Kind::boundary) continue;
    const auto [p0, p1] = disc.mesh().side_points(id, side);
    const double len = (p1 - p0).norm();
    for (const auto& load : disc.scenario().loads) {
      const auto [t0, t1] = load.segment.overlap(p0, p1);
      if (!(t1 > t0)) continue;
      for (int q = 0; q < 3; ++q) {
        const double t = t0 + (t1 - t0) * Gauss3::points[q];
        const Vec2 r = disc.local(e, p0 + t * (p1 - p0));
        const auto phi = q2::values(std::clamp(r.x(), 0.0, 1.0), std::clamp(r.y(), 0.0, 1.0));
        const double w = Gauss3::weights[q] * (t1 - t0) * len;
        for (int n = 0; n < 9; ++n) {
          f(2 * n) += w * phi[n] * load.traction.x();
          f(2 * n + 1) += w * phi[n] * load.traction.y();
        }
      }
    }
  }
  return f;
}

}  // namespace

LinearSystem assemble(const Discretization& disc, const TensorField& tensors) {
  if (tensors.size() != disc.num_elements()) throw std::invalid_argument("tensor field size does not match the mesh");
  const int ndof = disc.num_dofs();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(disc.num_elements() * 18 * 18);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto ke = element_stiffness(tensors[e]);
    const auto fe = element_load(disc, e);
    const auto& nodes = disc.element_nodes(e);
    std::array<const Discretization::Expansion*, 18> ex{};
    for (int n = 0; n < 9; ++n)
      for (int c = 0; c < 2; ++c) ex[2 * n + c] = &disc.expansion(nodes[n], c);
    for (int a = 0; a < 18; ++a) {
      for (const auto& ta : ex[a]->terms) {
        rhs(ta.dof) += ta.weight * fe(a);
        for (int b = 0; b < 18; ++b) {
          const double k = ke(a, b);
          if (k == 0.0) continue;
          for (const auto& tb : ex[b]->terms) trip.emplace_back(ta.dof, tb.dof, ta.weight * tb.weight * k);
          if (ex[b]->offset != 0.0) rhs(ta.dof) -= ta.weight * k * ex[b]->offset;
        }
      }
    }
  }
  LinearSystem sys;
  sys.matrix.resize(ndof, ndof);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = std::move(rhs);
  return sys;
}

DisplacementField assemble_and_solve(std::shared_ptr<const Discretization> disc, const TensorField& tensors,
                                     SolveReport* report) {
  if (disc->scenario().dirichlet.empty()) throw SolverError("no Dirichlet boundary: the system is singular");
  for (const auto& c : tensors)
    if (!c.positive_definite()) throw SolverError("element tensor is not positive definite");
  const LinearSystem sys = assemble(*disc, tensors);
  const double bnorm = sys.rhs.norm();
  if (bnorm == 0.0) {
    if (report) *report = {};
    return DisplacementField::from_dofs(disc, Eigen::VectorXd::Zero(disc->num_dofs()));
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sys.matrix);
  if (llt.info() != Eigen::Success) throw SolverError("stiffness factorization failed (singular system)");
  Eigen::VectorXd x = llt.solve(sys.rhs);
  // Relative to the larger of |b| and |Kx|: a Dirichlet lifting can make b tiny by cancellation.
  auto relative = [&](const Eigen::VectorXd& r) {
    return r.norm() / std::max(bnorm, (sys.matrix * x).norm());
  };
  Eigen::VectorXd r = sys.rhs - sys.matrix * x;
  double rel = relative(r);
  int steps = 0;
  while (rel > 1e-13 && steps < 3) {
    x += llt.solve(r);
    r = sys.rhs - sys.matrix * x;
    rel = relative(r);
    ++steps;
  }
  if (!(rel <= 1e-10)) throw SolverError("linear solve residual too large", rel);
  if (report) *report = {rel, steps};
  return DisplacementField::from_dofs(disc, x);
}

// ---------------------------------------------------------------------------
// Functionals

double compliance(const DisplacementField& u) {
  const auto& disc = u.discretization();
  double total = 0.0;
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto fe = element_load(disc, e);
    if (fe.isZero(0.0)) continue;
    total += fe.dot(local_values(u, e));
  }
  return total;
}

double bilinear(const TensorField& tensors, const DisplacementField& u, const DisplacementField& v) {
  const auto& disc = u.discretization();
  double total = 0.0;
  for (std::size_t e = 0; e < disc.num_elements(); ++e)
    total += local_values(v, e).dot(element_stiffness(tensors[e]) * local_values(u, e));
  return total;
}

std::vector<Eigen::Matrix3d> strain_moments(const DisplacementField& u) {
  const auto& disc = u.discretization();
  std::vector<Eigen::Matrix3d> out(disc.num_elements());
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto ue = local_values(u, e);
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        // Reference strain; the h^-2 of the strains cancels the h^2 of the measure.
        const Eigen::Vector3d s = reference_b(Gauss3::points[a], Gauss3::points[b]) * ue;
        m += Gauss3::weights[a] * Gauss3::weights[b] * s * s.transpose();
      }
    out[e] = m;
  }
  return out;
}

std::vector<Sym2> mean_strains(const DisplacementField& u) {
  const auto& disc = u.discretization();
  std::vector<Sym2> out(disc.num_elements());
  for (std::size_t e = 0; e < disc.num_elements(); ++e) {
    const auto ue = local_values(u, e);
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        s += Gauss3::weights[a] * Gauss3::weights[b] * (reference_b(Gauss3::points[a], Gauss3::points[b]) * ue);
    out[e] = strain_from_voigt(s / disc.element(e).size());
  }
  return out;
}

Vec2 element_residual(const DisplacementField& u, const ElasticTensor2D& c, std::size_t e, double xi, double eta) {
  const auto h = u.hessian(e, xi, eta);
  // d_j d_l u_k as a 2x2 matrix per component k.
  std::array<Mat2, 2> d2;
  for (int k = 0; k < 2; ++k) d2[k] << h[k](0), h[k](2), h[k](2), h[k](1);
  Vec2 r = Vec2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) r(i) += c(i, j, k, l) * d2[k](j, l);
  return r;
}

Sym2 stress_at(const DisplacementField& u, const TensorField& tensors, std::size_t e, const Vec2& p) {
  const Vec2 r = u.discretization().local(e, p);
  return tensors[e].apply(u.strain(e, std::clamp(r.x(), 0.0, 1.0), std::clamp(r.y(), 0.0, 1.0)));
}

Vec2 edge_jump(const DisplacementField& u, const TensorField& tensors, std::size_t e, Side side, double s) {
  const auto& disc = u.discretization();
  const auto& mesh = disc.mesh();
  const int id = disc.element_id(e);
  const auto [p0, p1] = mesh.side_points(id, side);
  const Vec2 p = p0 + s * (p1 - p0);
  const Vec2 nu = outward_normal(side);
  const Vec2 own = stress_at(u, tensors, e, p).matrix() * nu;
  const Neighbor nb = mesh.neighbor(id, side);
  if (nb.kind == Neighbor::Kind::boundary) {
    Vec2 j = own - disc.traction_at(p);
    const auto fixed = disc.fixed_at(p);
    for (int c = 0; c < 2; ++c)
      if (fixed[c]) j(c) = 0.0;
    return j;
  }
  int other = nb.leaves.front();
  if (nb.leaves.size() > 1) {
    for (int cand : nb.leaves) {
      const Element& el = mesh.element(cand);
      const Vec2 r = (p - el.lower_left()) / el.size();
      if (r.x() >= -kGeomTol && r.x() <= 1 + kGeomTol && r.y() >= -kGeomTol && r.y() <= 1 + kGeomTol) {
        other = cand;
        break;
      }
    }
  }
  const auto oe = static_cast<std::size_t>(mesh.leaf_index(other));
  const Vec2 theirs = stress_at(u, tensors, oe, p).matrix() * nu;
  return 0.5 * (own - theirs);
}

double von_mises(const Sym2& s) {
  return std::sqrt(std::max(0.0, s.xx * s.xx + s.yy * s.yy - s.xx * s.yy + 3.0 * s.xy * s.xy));
}

std::vector<double> von_mises(const DisplacementField& u, const TensorField& tensors) {
  const auto& disc = u.discretization();
  std::vector<double> out(disc.num_elements());
  for (std::size_t e = 0; e < disc.num_elements(); ++e)
    out[e] = von_mises(tensors[e].apply(u.strain(e, 0.5, 0.5)));
  return out;
}

}  // namespace twoscale
