#include "twoscale/dwr.hpp"

#include "parallel.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace twoscale {

namespace {

constexpr std::array<double, 5> kQ4Nodes{0.0, 0.25, 0.5, 0.75, 1.0};

std::array<double, 5> q4_values(double t) {
  std::array<double, 5> v{};
  for (int k = 0; k < 5; ++k) {
    double p = 1.0;
    for (int m = 0; m < 5; ++m)
      if (m != k) p *= (t - kQ4Nodes[m]) / (kQ4Nodes[k] - kQ4Nodes[m]);
    v[k] = p;
  }
  return v;
}

std::array<double, 5> q4_derivatives(double t) {
  std::array<double, 5> d{};
  for (int k = 0; k < 5; ++k) {
    double denom = 1.0;
    for (int m = 0; m < 5; ++m)
      if (m != k) denom *= kQ4Nodes[k] - kQ4Nodes[m];
    double sum = 0.0;
    for (int skip = 0; skip < 5; ++skip) {
      if (skip == k) continue;
      double p = 1.0;
      for (int m = 0; m < 5; ++m)
        if (m != k && m != skip) p *= t - kQ4Nodes[m];
      sum += p;
    }
    d[k] = sum / denom;
  }
  return d;
}

TensorField difference(const TensorField& a, const TensorField& b) {
  TensorField d(a.size());
  for (std::size_t e = 0; e < a.size(); ++e) d[e] = a[e] - b[e];
  return d;
}

}  // namespace

LaminateApproximation approximate_uL(std::shared_ptr<const Discretization> disc, const TensorField& c_s,
                                     const DisplacementField& u_s, int k) {
  if (k < 0) throw std::invalid_argument("approximate_uL: negative round count");
  LaminateApproximation out;
  if (k == 0) {
    const std::size_t ne = disc->num_elements();
    const std::vector<Sym2> strains = mean_strains(u_s);
    std::vector<Sym2> stresses(ne);
    std::vector<double> areas(ne);
    for (std::size_t e = 0; e < ne; ++e) {
      stresses[e] = c_s[e].apply(strains[e]);
      areas[e] = disc->element(e).area();
    }
    const Scenario& sc = disc->scenario();
    out.multiplier = volume_multiplier(stresses, areas, sc.volume_fraction * sc.area(), sc.material);
    out.tensors = c_s;
    out.u = u_s;
    return out;
  }
  AlternatingResult r = alternating_optimize(disc, c_s, u_s, k);
  out.tensors = std::move(r.tensors);
  out.u = std::move(r.u);
  out.multiplier = r.multiplier;
  out.rounds = static_cast<int>(r.compliance.size());
  out.compliance = std::move(r.compliance);
  return out;
}

// ---------------------------------------------------------------------------
// BiquarticPatch

BiquarticPatch::BiquarticPatch(const DisplacementField& u, std::size_t e) : u_(&u), e_(e) {
  const Discretization& disc = u.discretization();
  const QuadMesh& mesh = disc.mesh();
  const Element& el = disc.element(e);
  if (el.parent < 0) return;
  const Element& parent = mesh.element(el.parent);
  std::array<int, 4> leaves{};
  for (int c = 0; c < 4; ++c) {
    const Element& child = mesh.element(parent.children[c]);
    if (!child.leaf()) return;
    leaves[c] = mesh.leaf_index(child.id);
  }
  fallback_ = false;
  parent_size_ = parent.size();
  scale_ = el.size() / parent_size_;
  offset_ = (el.lower_left() - parent.lower_left()) / parent_size_;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      const int cx = i <= 2 ? 0 : 1, cy = j <= 2 ? 0 : 1;
      const double xi = 2.0 * kQ4Nodes[i] - cx, eta = 2.0 * kQ4Nodes[j] - cy;
      nodes_[j][i] = u.value(static_cast<std::size_t>(leaves[2 * cy + cx]), xi, eta);
    }
}

Vec2 BiquarticPatch::patch_coords(double xi, double eta) const { return offset_ + scale_ * Vec2(xi, eta); }

Vec2 BiquarticPatch::value(double xi, double eta) const {
  if (fallback_) return u_->value(e_, xi, eta);
  const Vec2 p = patch_coords(xi, eta);
  const auto bx = q4_values(p.x()), by = q4_values(p.y());
  Vec2 v = Vec2::Zero();
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) v += bx[i] * by[j] * nodes_[j][i];
  return v;
}

Mat2 BiquarticPatch::gradient(double xi, double eta) const {
  if (fallback_) return u_->gradient(e_, xi, eta);
  const Vec2 p = patch_coords(xi, eta);
  const auto bx = q4_values(p.x()), by = q4_values(p.y());
  const auto dx = q4_derivatives(p.x()), dy = q4_derivatives(p.y());
  Mat2 g = Mat2::Zero();
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      g.col(0) += dx[i] * by[j] * nodes_[j][i];
      g.col(1) += bx[i] * dy[j] * nodes_[j][i];
    }
  return g / parent_size_;
}

// ---------------------------------------------------------------------------

ModelTensor approximate_CL(const Sym2& eps, double l, const IsotropicMaterial& a, const ElasticTensor2D& fallback) {
  ModelTensor out{fallback, false};
  if (!(eps.norm() > 0.0) || !(l > 0.0)) return out;
  const Sym2 guess = fallback.apply(eps);
  StressEigen start = StressEigen::of(guess);
  double best = INFINITY;
  for (const StressEigen& root : laminate_stress_roots(eps, l, a)) {
    const double d = (root.reconstruct() - guess).norm();
    if (d < best) {
      best = d;
      start = root;
    }
  }
  const NewtonInversion r = newton_invert(eps, l, a, start);
  if (!r.converged) return out;
  out.tensor = r.tensor;
  out.converged = true;
  return out;
}

std::vector<double> ErrorBreakdown::element_totals() const {
  std::vector<double> t(eta_volume.size());
  for (std::size_t e = 0; e < t.size(); ++e) t[e] = element_total(e);
  return t;
}

ErrorBreakdown assemble_indicators(const TensorField& c_s, const DisplacementField& u_s, const DisplacementField& u_l,
                                   const ModelTensorFn& model, bool patch) {
  const Discretization& disc = u_s.discretization();
  const QuadMesh& mesh = disc.mesh();
  if (&u_l.discretization() != &disc) throw std::invalid_argument("assemble_indicators: fields on different meshes");
  const std::size_t ne = disc.num_elements();
  if (c_s.size() != ne) throw std::invalid_argument("assemble_indicators: tensor field size mismatch");

  ErrorBreakdown b;
  b.eta_volume.assign(ne, 0.0);
  b.eta_edge.assign(ne, 0.0);
  b.eta_model.assign(ne, 0.0);
  b.eta_model_signed.assign(ne, 0.0);
  std::vector<char> fallback(ne, 0);
  std::vector<int> failures(ne, 0);
  const auto& gp = Gauss3::points;
  const auto& gw = Gauss3::weights;

  detail::parallel_for(static_cast<int>(ne), [&](int ei) {
    const std::size_t e = static_cast<std::size_t>(ei);
    const Element& el = disc.element(e);
    const BiquarticPatch interp(u_l, e);
    fallback[e] = patch && interp.fallback() ? 1 : 0;
    auto weight_at = [&](double xi, double eta) -> Vec2 {
      return (patch ? interp.value(xi, eta) : u_l.value(e, xi, eta)) - u_s.value(e, xi, eta);
    };
    auto weight_strain = [&](double xi, double eta) { return patch ? interp.strain(xi, eta) : u_l.strain(e, xi, eta); };
    const double area = el.area();

    double vol = 0.0, mod = 0.0;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        const double w = gw[i] * gw[j] * area;
        vol += w * element_residual(u_s, c_s[e], e, gp[i], gp[j]).dot(weight_at(gp[i], gp[j]));
        const Sym2 eps_s = u_s.strain(e, gp[i], gp[j]);
        const ModelTensor m = model(e, weight_strain(gp[i], gp[j]));
        if (!m.converged) ++failures[e];
        mod += w * (m.tensor - c_s[e]).energy(eps_s);
      }

    double edge = 0.0;
    for (int s = 0; s < 4; ++s) {
      const Side side = static_cast<Side>(s);
      const auto [p0, p1] = mesh.side_points(el.id, side);
      const double len = (p1 - p0).norm();
      const Neighbor nb = mesh.neighbor(el.id, side);
      std::vector<double> breaks;
      if (nb.kind == Neighbor::Kind::boundary) {
        breaks = disc.boundary_breaks(p0, p1);
      } else if (nb.kind == Neighbor::Kind::finer) {
        breaks = {0.0, 0.5, 1.0};
      } else {
        breaks = {0.0, 1.0};
      }
      for (std::size_t piece = 0; piece + 1 < breaks.size(); ++piece) {
        const double a = breaks[piece], h = breaks[piece + 1] - a;
        for (int q = 0; q < 3; ++q) {
          const double t = a + h * gp[q];
          const Vec2 r = disc.local(e, p0 + t * (p1 - p0));
          edge += gw[q] * h * len * edge_jump(u_s, c_s, e, side, t).dot(weight_at(r.x(), r.y()));
        }
      }
    }
    b.eta_volume[e] = std::abs(vol);
    b.eta_edge[e] = std::abs(edge);
    b.eta_model_signed[e] = mod;
    b.eta_model[e] = std::abs(mod);
  });

  for (std::size_t e = 0; e < ne; ++e) {
    b.volume += b.eta_volume[e];
    b.edge += b.eta_edge[e];
    b.model += 0.5 * b.eta_model[e];
    b.model_signed += 0.5 * b.eta_model_signed[e];
    b.patch_fallbacks += fallback[e];
    b.newton_failures += failures[e];
  }
  b.total = b.volume + b.edge + b.model;
  b.compliance = compliance(u_s);
  b.elements = ne;
  return b;
}

ErrorBreakdown assemble_indicators(const TensorField& c_s, const DisplacementField& u_s,
                                   const LaminateApproximation& lam) {
  const IsotropicMaterial& a = u_s.discretization().scenario().material;
  const double l = lam.multiplier;
  return assemble_indicators(c_s, u_s, lam.u, [&](std::size_t e, const Sym2& eps) {
    return approximate_CL(eps, l, a, lam.tensors[e]);
  });
}

ErrorBreakdown estimate(std::shared_ptr<const Discretization> disc, const TensorField& c_s, const DisplacementField& u_s,
                        int k) {
  const LaminateApproximation lam = approximate_uL(disc, c_s, u_s, k);
  return assemble_indicators(c_s, u_s, lam);
}

TrapezoidCheck trapezoid_identity_check(const TensorField& c_s, const DisplacementField& u_s, const TensorField& c_l,
                                        const DisplacementField& u_l) {
  if (&u_s.discretization() != &u_l.discretization())
    throw std::invalid_argument("trapezoid_identity_check: fields on different meshes");
  const TensorField e_c = difference(c_l, c_s);
  const DisplacementField e_u = u_l - u_s;
  auto lagrangian = [](const TensorField& c, const DisplacementField& u) {
    return 2.0 * compliance(u) - bilinear(c, u, u);
  };
  const double lag_s = lagrangian(c_s, u_s), lag_l = lagrangian(c_l, u_l);
  const double l_eu = compliance(e_u);

  TrapezoidCheck t;
  t.e_lagrangian = lag_l - lag_s;
  t.f0 = 2.0 * l_eu - 2.0 * bilinear(c_s, u_s, e_u) - bilinear(e_c, u_s, u_s);
  t.f1_state = 2.0 * l_eu - 2.0 * bilinear(c_l, u_l, e_u);
  t.f1_design = -bilinear(e_c, u_l, u_l);
  t.f1 = t.f1_state + t.f1_design;
  t.remainder = 0.5 * bilinear(e_c, e_u, e_u);
  t.residual = t.e_lagrangian - 0.5 * (t.f0 + t.f1) - t.remainder;
  for (double v : {lag_s, lag_l, t.f0, t.f1, t.remainder}) t.scale = std::max(t.scale, std::abs(v));
  return t;
}

void write_breakdown_header(std::ostream& os) { os << "step,edge,volume,model,total,compliance,elements\n"; }

void write_breakdown_row(std::ostream& os, int step, const ErrorBreakdown& b) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10) << step << ',' << b.edge << ',' << b.volume << ',' << b.model << ',' << b.total << ','
     << b.compliance << ',' << b.elements << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace twoscale
