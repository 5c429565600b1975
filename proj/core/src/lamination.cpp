#include "twoscale/lamination.hpp"

#include "twoscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twoscale {

namespace {

Eigen::Vector3d mandel(const Sym2& s) { return {s.xx, s.yy, std::numbers::sqrt2 * s.xy}; }

double theta_scale(const IsotropicMaterial& a, double l) {
  return std::sqrt((2.0 * a.mu + a.lambda) / (4.0 * a.mu * (a.mu + a.lambda) * l));
}

}  // namespace

StressEigen StressEigen::of(const Sym2& s) {
  const double mean = 0.5 * (s.xx + s.yy);
  const double half = 0.5 * (s.xx - s.yy);
  const double rad = std::hypot(half, s.xy);
  const double big = mean + rad, small = mean - rad;
  StressEigen e;
  if (rad <= 1e-15 * std::abs(mean)) {
    e.alpha = 0.0;
    e.l1 = e.l2 = mean;
    return e;
  }
  double phi = 0.5 * std::atan2(s.xy, half);  // eigenvector of the larger eigenvalue
  if (std::abs(small) > std::abs(big)) {
    e.l1 = small;
    e.l2 = big;
    phi += 0.5 * std::numbers::pi;
  } else {
    e.l1 = big;
    e.l2 = small;
  }
  phi = std::fmod(phi, std::numbers::pi);
  if (phi < 0.0) phi += std::numbers::pi;
  e.alpha = phi;
  return e;
}

Sym2 StressEigen::reconstruct() const {
  const Mat2 R = rotation(alpha);
  return Sym2::from_matrix(R * Eigen::Vector2d(l1, l2).asDiagonal() * R.transpose());
}

LaminateParams laminate_params(const StressEigen& s, double l, const IsotropicMaterial& a) {
  if (!(l > 0.0)) throw std::invalid_argument("laminate_params: multiplier must be positive");
  const double sum = std::abs(s.l1) + std::abs(s.l2);
  LaminateParams p;
  p.alpha = s.alpha;
  if (sum == 0.0) return p;
  p.m = std::abs(s.l2) / sum;
  p.theta = std::min(1.0, theta_scale(a, l) * sum);
  return p;
}

LaminateParams laminate_params(const Sym2& sigma, double l, const IsotropicMaterial& a) {
  return laminate_params(StressEigen::of(sigma), l, a);
}

ElasticTensor2D laminate_tensor_bare(double m, double theta, const IsotropicMaterial& a) {
  const double k = a.lambda + a.mu, mu = a.mu;
  const double kk = k + mu;
  const double den = 4.0 * k * mu * m * (1.0 - m) * theta * theta + kk * kk * (1.0 - theta);
  ElasticTensor2D c;
  if (den <= 0.0) {
    // theta = 1 with m in {0, 1}: the limit along m
    c.c1111 = kk;
    c.c2222 = kk;
    c.c1122 = a.lambda;
    return c;
  }
  c.c1111 = 4.0 * k * mu * kk * theta * (1.0 - theta * (1.0 - m)) * (1.0 - m) / den;
  c.c2222 = 4.0 * k * mu * kk * theta * (1.0 - theta * m) * m / den;
  c.c1122 = 4.0 * k * mu * a.lambda * theta * theta * m * (1.0 - m) / den;
  return c;
}

ElasticTensor2D laminate_tensor(double alpha, double m, double theta, const IsotropicMaterial& a) {
  if (!(m >= 0.0 && m <= 1.0 && theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("laminate_tensor: m and theta must lie in [0, 1]");
  ElasticTensor2D c = laminate_tensor_bare(m, theta, a);
  c += ElasticTensor2D::identity() * laminate_regularization(a);
  return c.rotated(alpha);
}

ElasticTensor2D laminate_from_stress(double alpha, double l1, double l2, double l, const IsotropicMaterial& a) {
  StressEigen s{alpha, l1, l2};
  return laminate_tensor(laminate_params(s, l, a), a);
}

std::vector<StressEigen> laminate_stress_roots(const Sym2& eps, double l, const IsotropicMaterial& a) {
  if (!(l > 0.0)) throw std::invalid_argument("laminate_stress_roots: multiplier must be positive");
  const StressEigen fe = StressEigen::of(eps);
  const Eigen::Vector2d e(fe.l1, fe.l2);
  const double g = theta_scale(a, l);
  const double k = a.lambda + a.mu;
  const double c = (k + a.mu) / (4.0 * k * a.mu);
  const double nu = a.lambda / (2.0 * k);
  const double scale = std::max(e.cwiseAbs().maxCoeff() * (a.lambda + 2.0 * a.mu), 1e-300);
  const Mat2 R = rotation(fe.alpha);

  std::vector<StressEigen> out;
  auto accept = [&](const Eigen::Vector2d& s) {
    out.push_back(StressEigen::of(Sym2::from_matrix(R * s.asDiagonal() * R.transpose())));
  };
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      const Eigen::Vector2d sg(s1, s2);
      Mat2 M;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) M(i, j) = ((i == j ? 1.0 : 0.0) - nu) / (2.0 * a.mu) - c * sg(i) * sg(j);
      const Eigen::Vector2d x = M.fullPivLu().solve(e - (c / g) * sg);
      if (!x.allFinite() || (M * x - (e - (c / g) * sg)).norm() > 1e-10 * (e.norm() + c / g)) continue;
      if (sg(0) * x(0) < -1e-12 * scale || sg(1) * x(1) < -1e-12 * scale) continue;
      const double S = x.cwiseAbs().sum();
      if (S == 0.0 || g * S >= 1.0) continue;
      bool dup = false;
      for (const auto& r : out) dup = dup || (r.reconstruct() - Sym2::from_matrix(R * x.asDiagonal() * R.transpose())).norm() <= 1e-12 * scale;
      if (!dup) accept(x);
    }
  // rank-one roots on the kinks: the unregularized relation is degenerate along rank-one rays, so
  // the magnitude comes from the regularized axial stiffness g |x| / c + r
  const double r = laminate_regularization(a);
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const double denom = 1.0 - g * std::abs(e(i)) / c;
    if (e(i) == 0.0 || denom <= 0.0) continue;
    const double x = std::copysign(r * std::abs(e(i)) / denom, e(i));
    if (g * std::abs(x) >= 1.0) continue;
    if (std::abs(e(j) + nu * x / (2.0 * a.mu)) > c * (1.0 / g - std::abs(x))) continue;
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    v(i) = x;
    bool dup = false;
    for (const auto& q : out) dup = dup || (q.reconstruct() - Sym2::from_matrix(R * v.asDiagonal() * R.transpose())).norm() <= 1e-12 * scale;
    if (!dup) accept(v);
  }
  const Eigen::Vector2d clamped(2.0 * a.mu * e(0) + a.lambda * e.sum(), 2.0 * a.mu * e(1) + a.lambda * e.sum());
  if (g * clamped.cwiseAbs().sum() >= 1.0) accept(clamped);
  return out;
}

NewtonInversion newton_invert(const Sym2& eps, double l, const IsotropicMaterial& a, const StressEigen& start) {
  const double scale = a.lambda + 2.0 * a.mu;
  const double eps_norm = eps.norm();
  if (!(eps_norm > 0.0)) throw std::invalid_argument("newton_invert: zero strain");
  const double tol = 1e-9 * eps_norm * scale;

  auto F = [&](const Eigen::Vector3d& x) {
    const ElasticTensor2D c = laminate_from_stress(x(0), x(1), x(2), l, a);
    return Eigen::Vector3d(mandel(c.apply(eps) - StressEigen{x(0), x(1), x(2)}.reconstruct()));
  };

  // roots share the principal frame of eps: snap the start angle to the nearest principal direction
  const double phi = StressEigen::of(eps).alpha;
  double alpha0 = start.alpha;
  {
    double best = INFINITY;
    for (int k = -2; k <= 2; ++k)
      for (double cand : {phi + k * std::numbers::pi, phi + (k + 0.5) * std::numbers::pi}) {
        if (std::abs(cand - start.alpha) < best) {
          best = std::abs(cand - start.alpha);
          alpha0 = cand;
        }
      }
  }
  Eigen::Vector3d x(alpha0, start.l1, start.l2);
  Eigen::Vector3d f = F(x);
  NewtonInversion out;
  int it = 0;
  for (; it < 100 && f.norm() > tol; ++it) {
    const double lam_scale = std::max({std::abs(x(1)), std::abs(x(2)), eps_norm * scale});
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-6 * (j == 0 ? 1.0 : lam_scale);
      Eigen::Vector3d xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      J.col(j) = (F(xp) - F(xm)) / (2.0 * h);
    }
    const Eigen::Vector3d dx = J.colPivHouseholderQr().solve(-f);
    if (!dx.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Eigen::Vector3d xn = x + t * dx;
      const Eigen::Vector3d fn = F(xn);
      if (fn.norm() < f.norm()) {
        x = xn;
        f = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.alpha = x(0);
  out.l1 = x(1);
  out.l2 = x(2);
  out.tensor = laminate_from_stress(x(0), x(1), x(2), l, a);
  out.residual = f.norm();
  out.iterations = it;
  out.converged = f.norm() <= tol;
  return out;
}

NewtonInversion newton_invert(const Sym2& eps, double l, const IsotropicMaterial& a) {
  return newton_invert(eps, l, a, StressEigen::of(ElasticTensor2D::isotropic(a).apply(eps)));
}

double volume_multiplier(const std::vector<Sym2>& stresses, const std::vector<double>& areas, double target,
                         const IsotropicMaterial& a) {
  if (stresses.size() != areas.size()) throw std::invalid_argument("volume_multiplier: size mismatch");
  if (!(target > 0.0)) throw std::invalid_argument("volume_multiplier: target must be positive");
  std::vector<double> s(stresses.size());
  double vmax = 0.0, moment = 0.0, smin = INFINITY;
  for (std::size_t e = 0; e < s.size(); ++e) {
    const StressEigen ev = StressEigen::of(stresses[e]);
    s[e] = std::abs(ev.l1) + std::abs(ev.l2);
    if (s[e] > 0.0) {
      vmax += areas[e];
      moment += areas[e] * s[e];
      smin = std::min(smin, s[e]);
    }
  }
  if (target > vmax * (1.0 - 1e-12))
    throw SolverError("volume_multiplier: target volume unreachable, achieved " + std::to_string(vmax), vmax);

  // theta_E = min(1, g s_E) with g = theta_scale(l); volume is increasing in g
  auto volume = [&](double g) {
    double v = 0.0;
    for (std::size_t e = 0; e < s.size(); ++e) v += areas[e] * std::min(1.0, g * s[e]);
    return v;
  };
  double lo = std::log(target / moment), hi = std::log(1.0 / smin);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (volume(std::exp(mid)) < target ? lo : hi) = mid;
  }
  // exact on the final linear piece
  double g = std::exp(0.5 * (lo + hi));
  double clamped = 0.0, slope = 0.0;
  for (std::size_t e = 0; e < s.size(); ++e) {
    if (g * s[e] >= 1.0)
      clamped += areas[e];
    else
      slope += areas[e] * s[e];
  }
  if (slope > 0.0) {
    const double gl = (target - clamped) / slope;
    if (std::abs(volume(gl) - target) < std::abs(volume(g) - target)) g = gl;
  }
  const double c = (2.0 * a.mu + a.lambda) / (4.0 * a.mu * (a.mu + a.lambda));
  return c / (g * g);
}

AlternatingResult alternating_optimize(std::shared_ptr<const Discretization> disc, const TensorField& tensors,
                                       const DisplacementField& u, int rounds, double tolerance) {
  const Scenario& sc = disc->scenario();
  const IsotropicMaterial& a = sc.material;
  const std::size_t ne = disc->num_elements();
  if (tensors.size() != ne) throw std::invalid_argument("alternating_optimize: tensor field size mismatch");
  std::vector<double> areas(ne);
  for (std::size_t e = 0; e < ne; ++e) areas[e] = disc->element(e).area();
  const double target = sc.volume_fraction * sc.area();

  AlternatingResult r;
  r.tensors = tensors;
  r.u = u;
  r.params.assign(ne, {});
  for (int round = 0; round < rounds; ++round) {
    const std::vector<Sym2> strains = mean_strains(r.u);
    std::vector<Sym2> stresses(ne);
    for (std::size_t e = 0; e < ne; ++e) stresses[e] = r.tensors[e].apply(strains[e]);
    r.multiplier = volume_multiplier(stresses, areas, target, a);
    double vol = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
      r.params[e] = laminate_params(stresses[e], r.multiplier, a);
      r.tensors[e] = laminate_tensor(r.params[e], a);
      vol += areas[e] * r.params[e].theta;
    }
    r.u = assemble_and_solve(disc, r.tensors);
    r.compliance.push_back(compliance(r.u));
    r.volume.push_back(vol);
    const std::size_t n = r.compliance.size();
    if (tolerance > 0.0 && n > 1 && std::abs(r.compliance[n - 1] - r.compliance[n - 2]) <= tolerance * r.compliance[n - 1])
      break;
  }
  return r;
}

}  // namespace twoscale
