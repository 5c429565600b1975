#include "twoscale/bem.hpp"

#include "parallel.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/microcell.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace twoscale::bem {

namespace {

constexpr double kCornerOffset = 1e-6;

double poisson(const IsotropicMaterial& m) { return m.lambda / (2.0 * (m.lambda + m.mu)); }

double log_or_zero(double r2) { return r2 > 0.0 ? std::log(r2) : 0.0; }

// Antiderivatives in the panel-local coordinate t with r^2 = t^2 + h^2, pre-multiplied by the
// powers of h in which they appear.
struct Primitive {
  double J1, J2, J3;          // t^m / r^2
  double hJ0, hJ1, hJ2;       // h t^m / r^2
  double h2J0, h2J1;          // h^2 t^m / r^2
  double hK2, hK3;            // h t^m / r^4
  double h2K1, h2K2;          // h^2 t^m / r^4
  double h3K0, h3K1;          // h^3 t^m / r^4
  double L0, L1;              // t^m log r

  Primitive operator-(const Primitive& o) const {
    Primitive d;
    d.J1 = J1 - o.J1;
    d.J2 = J2 - o.J2;
    d.J3 = J3 - o.J3;
    d.hJ0 = hJ0 - o.hJ0;
    d.hJ1 = hJ1 - o.hJ1;
    d.hJ2 = hJ2 - o.hJ2;
    d.h2J0 = h2J0 - o.h2J0;
    d.h2J1 = h2J1 - o.h2J1;
    d.hK2 = hK2 - o.hK2;
    d.hK3 = hK3 - o.hK3;
    d.h2K1 = h2K1 - o.h2K1;
    d.h2K2 = h2K2 - o.h2K2;
    d.h3K0 = h3K0 - o.h3K0;
    d.h3K1 = h3K1 - o.h3K1;
    d.L0 = L0 - o.L0;
    d.L1 = L1 - o.L1;
    return d;
  }
};

Primitive primitive(double t, double h) {
  Primitive p{};
  const double r2 = t * t + h * h;
  const double lg = log_or_zero(r2);
  p.J1 = 0.5 * lg;
  p.L1 = 0.25 * (r2 * lg - t * t);
  if (h == 0.0) {
    p.J2 = t;
    p.J3 = 0.5 * t * t;
    p.L0 = 0.5 * (t * lg - 2.0 * t);
    return p;
  }
  const double at = std::atan(t / h);
  p.J2 = t - h * at;
  p.J3 = 0.5 * t * t - 0.5 * h * h * lg;
  p.hJ0 = at;
  p.hJ1 = h * p.J1;
  p.hJ2 = h * p.J2;
  p.h2J0 = h * at;
  p.h2J1 = h * p.hJ1;
  p.hK2 = -0.5 * h * t / r2 + 0.5 * at;
  p.hK3 = h * (0.5 * lg + 0.5 * h * h / r2);
  p.h2K1 = -0.5 * h * h / r2;
  p.h2K2 = h * p.hK2;
  p.h3K0 = 0.5 * h * t / r2 + 0.5 * at;
  p.h3K1 = h * p.h2K1;
  p.L0 = 0.5 * (t * lg - 2.0 * t + 2.0 * h * at);
  return p;
}

Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

struct Edge {
  Vec2 a, b;
  int loop;
  int panels;
  int first_node;
};

}  // namespace

Mat2 kelvin(const Vec2& p, const Vec2& q, const IsotropicMaterial& m) {
  const Vec2 r = p - q;
  const double r2 = r.squaredNorm();
  if (!(r2 > 0.0)) throw std::invalid_argument("kelvin: coincident points");
  const double pre = (m.lambda + m.mu) / (4.0 * std::numbers::pi * m.mu * (m.lambda + 2.0 * m.mu));
  const double k3 = (m.lambda + 3.0 * m.mu) / (m.lambda + m.mu);
  return pre * (-k3 * 0.5 * std::log(r2) * Mat2::Identity() + outer(r, r) / r2);
}

Mat2 traction_kernel(const Vec2& x, const Vec2& y, const Vec2& n, const IsotropicMaterial& m) {
  const Vec2 d = y - x;
  const double r = d.norm();
  if (!(r > 0.0)) throw std::invalid_argument("traction_kernel: coincident points");
  const double nu = poisson(m);
  const Vec2 g = d / r;
  const double drdn = g.dot(n);
  const Mat2 a = drdn * ((1.0 - 2.0 * nu) * Mat2::Identity() + 2.0 * outer(g, g)) -
                 (1.0 - 2.0 * nu) * (outer(g, n) - outer(n, g));
  return -a / (4.0 * std::numbers::pi * (1.0 - nu) * r);
}

PanelIntegrals layer_integrals(const Vec2& a, const Vec2& b, const Vec2& x, const IsotropicMaterial& m) {
  const double len = (b - a).norm();
  if (!(len > 0.0)) throw std::invalid_argument("layer_integrals: zero-length panel");
  const Vec2 tau = (b - a) / len;
  const Vec2 n(tau.y(), -tau.x());
  const Vec2 d = a - x;
  const double tol = 1e-13 * len;
  auto snap = [tol](double v) { return std::abs(v) < tol ? 0.0 : v; };
  const double t0 = snap(d.dot(tau));
  const double t1 = snap(d.dot(tau) + len);
  const double h = snap(d.dot(n));
  const Primitive P = primitive(t1, h) - primitive(t0, h);

  const double nu = poisson(m);
  const double cu = (m.lambda + m.mu) / (4.0 * std::numbers::pi * m.mu * (m.lambda + 2.0 * m.mu));
  const double k3 = (m.lambda + 3.0 * m.mu) / (m.lambda + m.mu);
  const double ct = -1.0 / (4.0 * std::numbers::pi * (1.0 - nu));
  const double c2 = 1.0 - 2.0 * nu;

  const Mat2 I = Mat2::Identity();
  const Mat2 tt = outer(tau, tau);
  const Mat2 tn = outer(tau, n) + outer(n, tau);
  const Mat2 nn = outer(n, n);
  const Mat2 sk = outer(tau, n) - outer(n, tau);

  // Moments k = 0, 1 (integrands times 1 and t).
  const std::array<Mat2, 2> U{
      cu * (-k3 * P.L0 * I + P.J2 * tt + P.hJ1 * tn + P.h2J0 * nn),
      cu * (-k3 * P.L1 * I + P.J3 * tt + P.hJ2 * tn + P.h2J1 * nn),
  };
  const std::array<Mat2, 2> T{
      ct * (c2 * P.hJ0 * I + 2.0 * (P.hK2 * tt + P.h2K1 * tn + P.h3K0 * nn) - c2 * P.J1 * sk),
      ct * (c2 * P.hJ1 * I + 2.0 * (P.hK3 * tt + P.h2K2 * tn + P.h3K1 * nn) - c2 * P.J2 * sk),
  };

  PanelIntegrals out;
  // phi0 = (t1 - t) / L, phi1 = (t - t0) / L
  out.single[0] = (t1 * U[0] - U[1]) / len;
  out.single[1] = (U[1] - t0 * U[0]) / len;
  out.dbl[0] = (t1 * T[0] - T[1]) / len;
  out.dbl[1] = (T[1] - t0 * T[0]) / len;
  return out;
}

BemCellResult solve_cell_bem(double d1, double d2, const Sym2& xi, const IsotropicMaterial& m, int panels_per_edge,
                             double alpha) {
  if (panels_per_edge < 1) throw std::invalid_argument("solve_cell_bem: panels_per_edge < 1");
  if (!m.admissible()) throw std::invalid_argument("solve_cell_bem: inadmissible material");
  if (!(d1 > 0.0 && d1 <= 1.0 && d2 > 0.0 && d2 <= 1.0))
    throw std::invalid_argument("solve_cell_bem: widths outside (0, 1]");

  const ElasticTensor2D A = ElasticTensor2D::isotropic(m);
  const Mat2 Q = rotation(alpha);
  const int P = panels_per_edge;

  // Loops in the axis-aligned frame; outer counterclockwise, hole clockwise.
  std::vector<Edge> edges;
  int count = 0;
  auto add_edge = [&](Vec2 a, Vec2 b, int loop, int panels) {
    edges.push_back({a, b, loop, panels, count});
    count += panels + 1;
  };
  add_edge({0, 0}, {1, 0}, 0, P);  // bottom
  add_edge({1, 0}, {1, 1}, 0, P);  // right
  add_edge({1, 1}, {0, 1}, 0, P);  // top
  add_edge({0, 1}, {0, 0}, 0, P);  // left
  const bool hole = d1 < 1.0 && d2 < 1.0;
  if (hole) {
    const double x0 = 0.5 * d1, x1 = 1.0 - 0.5 * d1, y0 = 0.5 * d2, y1 = 1.0 - 0.5 * d2;
    const int px = std::max(2, static_cast<int>(std::ceil(P * (x1 - x0))));
    const int py = std::max(2, static_cast<int>(std::ceil(P * (y1 - y0))));
    add_edge({x0, y0}, {x0, y1}, 1, py);
    add_edge({x0, y1}, {x1, y1}, 1, px);
    add_edge({x1, y1}, {x1, y0}, 1, py);
    add_edge({x1, y0}, {x0, y0}, 1, px);
  }
  for (auto& e : edges) {
    e.a = Q * e.a;
    e.b = Q * e.b;
  }
  const int nodes = count;

  std::vector<BoundaryNode> bn(nodes);
  std::vector<int> edge_of(nodes), pos_of(nodes);
  for (int ei = 0; ei < static_cast<int>(edges.size()); ++ei) {
    const Edge& e = edges[ei];
    const Vec2 tau = (e.b - e.a).normalized();
    for (int k = 0; k <= e.panels; ++k) {
      const int g = e.first_node + k;
      bn[g].point = e.a + (static_cast<double>(k) / e.panels) * (e.b - e.a);
      bn[g].normal = Vec2(tau.y(), -tau.x());
      bn[g].loop = e.loop;
      edge_of[g] = ei;
      pos_of[g] = k;
    }
  }

  // Unknown slots: w and t on bottom and left, w on the hole. Top and right map onto their
  // periodic images (same parameter measured from the shared corner).
  struct Slot {
    int col = -1;
    double sign = 1.0;
  };
  std::vector<Slot> wslot(nodes), tslot(nodes);
  std::vector<Vec2> tknown(nodes, Vec2::Zero());
  int cols = 0;
  for (int ei : {0, 3}) {
    const Edge& e = edges[ei];
    for (int k = 0; k <= P; ++k) {
      wslot[e.first_node + k] = {cols, 1.0};
      tslot[e.first_node + k] = {cols + 2, 1.0};
      cols += 4;
    }
  }
  for (int k = 0; k <= P; ++k) {
    const int top = edges[2].first_node + k, bottom = edges[0].first_node + (P - k);
    wslot[top] = {wslot[bottom].col, 1.0};
    tslot[top] = {tslot[bottom].col, -1.0};
    const int right = edges[1].first_node + k, left = edges[3].first_node + (P - k);
    wslot[right] = {wslot[left].col, 1.0};
    tslot[right] = {tslot[left].col, -1.0};
  }
  for (int g = 0; g < nodes; ++g) {
    if (bn[g].loop != 1) continue;
    wslot[g] = {cols, 1.0};
    cols += 2;
    const Sym2 s = A.apply(xi);
    tknown[g] = -(s.matrix() * bn[g].normal);
  }
  const int rows = 2 * nodes;
  if (rows != cols) throw std::logic_error("solve_cell_bem: unbalanced collocation system");

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows + 2, cols);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + 2);

  auto add_w = [&](Eigen::Ref<Eigen::MatrixXd> row2, int g, const Mat2& blk) {
    row2.middleCols(wslot[g].col, 2) += wslot[g].sign * blk;
  };

  detail::parallel_for(nodes, [&](int i) {
    const Edge& own = edges[edge_of[i]];
    const int k = pos_of[i];
    Vec2 x = bn[i].point;
    int other = -1;
    if (k == 0) {
      other = i + 1;
      x += kCornerOffset * (own.b - own.a) / own.panels;
    } else if (k == own.panels) {
      other = i - 1;
      x -= kCornerOffset * (own.b - own.a) / own.panels;
    }
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(2, cols);
    Vec2 r = Vec2::Zero();
    if (other < 0) {
      add_w(row, i, 0.5 * Mat2::Identity());
    } else {
      add_w(row, i, 0.5 * (1.0 - kCornerOffset) * Mat2::Identity());
      add_w(row, other, 0.5 * kCornerOffset * Mat2::Identity());
    }
    for (const Edge& e : edges) {
      for (int p = 0; p < e.panels; ++p) {
        const int g0 = e.first_node + p, g1 = g0 + 1;
        const PanelIntegrals I = layer_integrals(bn[g0].point, bn[g1].point, x, m);
        const std::array<int, 2> g{g0, g1};
        for (int a = 0; a < 2; ++a) {
          // c w + sum T w = sum U t, kernels indexed (force, response)
          add_w(row, g[a], I.dbl[a]);
          if (tslot[g[a]].col >= 0)
            row.middleCols(tslot[g[a]].col, 2) -= tslot[g[a]].sign * I.single[a];
          else
            r += I.single[a] * tknown[g[a]];
        }
      }
    }
    M.middleRows(2 * i, 2) = row;
    rhs.segment(2 * i, 2) = r;
  });

  // Gauge: zero mean of the independent displacement slots.
  const double scale = M.topRows(rows).cwiseAbs().maxCoeff();
  for (int g = 0; g < nodes; ++g) {
    if (tslot[g].sign < 0.0) continue;
    for (int c = 0; c < 2; ++c) M(rows + c, wslot[g].col + c) = scale / nodes;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::VectorXd sol = qr.solve(rhs);
  const double bnorm = rhs.norm();
  BemCellResult res;
  res.residual = bnorm > 0.0 ? (M * sol - rhs).norm() / bnorm : (M * sol).norm();
  if (!sol.allFinite()) throw SolverError("solve_cell_bem: non-finite solution", res.residual);

  for (int g = 0; g < nodes; ++g) {
    bn[g].w = wslot[g].sign * sol.segment<2>(wslot[g].col);
    bn[g].t = tslot[g].col >= 0 ? Vec2(tslot[g].sign * sol.segment<2>(tslot[g].col)) : tknown[g];
  }

  const Sym2 s = A.apply(xi);
  double e = density(d1, d2) * s.dot(xi);
  for (const Edge& ed : edges) {
    if (ed.loop != 1) continue;
    for (int p = 0; p < ed.panels; ++p) {
      const BoundaryNode& n0 = bn[ed.first_node + p];
      const BoundaryNode& n1 = bn[ed.first_node + p + 1];
      const double len = (n1.point - n0.point).norm();
      e += 0.5 * len * (s.matrix() * n0.normal).dot(n0.w + n1.w);
    }
  }
  res.energy = e;
  res.nodes = std::move(bn);
  return res;
}

ElasticTensor2D bem_effective_tensor(double d1, double d2, const IsotropicMaterial& m, int panels_per_edge,
                                     double alpha) {
  const std::array<Sym2, 3> unit{Sym2{1, 0, 0}, Sym2{0, 1, 0}, Sym2{0, 0, 0.5}};
  Eigen::Matrix3d D;
  std::array<double, 3> diag{};
  for (int a = 0; a < 3; ++a) diag[a] = solve_cell_bem(d1, d2, unit[a], m, panels_per_edge, alpha).energy;
  for (int a = 0; a < 3; ++a) {
    D(a, a) = diag[a];
    for (int b = a + 1; b < 3; ++b) {
      const double eab = solve_cell_bem(d1, d2, unit[a] + unit[b], m, panels_per_edge, alpha).energy;
      D(a, b) = D(b, a) = 0.5 * (eab - diag[a] - diag[b]);
    }
  }
  return ElasticTensor2D::from_voigt(D);
}

void write_boundary_csv(std::ostream& os, const BemCellResult& r) {
  os << "x,y,nx,ny,loop,wx,wy,tx,ty\n";
  os.precision(12);
  for (const auto& n : r.nodes)
    os << n.point.x() << ',' << n.point.y() << ',' << n.normal.x() << ',' << n.normal.y() << ',' << n.loop << ','
       << n.w.x() << ',' << n.w.y() << ',' << n.t.x() << ',' << n.t.y() << '\n';
}

}  // namespace twoscale::bem
