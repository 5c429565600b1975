#include "twoscale/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twoscale {

bool Segment::contains(const Vec2& p, double tol) const {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm() <= tol;
  const double t = (p - a).dot(d) / len2;
  if (t < -tol || t > 1.0 + tol) return false;
  return (a + t * d - p).norm() <= tol;
}

std::pair<double, double> Segment::overlap(const Vec2& p0, const Vec2& p1, double tol) const {
  const Vec2 d = p1 - p0;
  const double len2 = d.squaredNorm();
  const Vec2 dir = d / std::sqrt(len2);
  auto off_line = [&](const Vec2& p) {
    const Vec2 r = p - p0;
    return std::abs(r.x() * dir.y() - r.y() * dir.x()) > tol;
  };
  if (off_line(a) || off_line(b)) return {1.0, 0.0};
  double ta = (a - p0).dot(d) / len2;
  double tb = (b - p0).dot(d) / len2;
  if (ta > tb) std::swap(ta, tb);
  return {std::max(ta, 0.0), std::min(tb, 1.0)};
}

double Scenario::area() const {
  double a = 0.0;
  for (const auto& r : roots) a += std::ldexp(1.0, -2 * r.level);
  return a;
}

int Scenario::root_level() const { return roots.empty() ? 0 : roots.front().level; }

void Scenario::validate() const {
  if (roots.empty()) throw std::invalid_argument("scenario '" + name + "': empty domain");
  for (const auto& r : roots)
    if (r.level != roots.front().level)
      throw std::invalid_argument("scenario '" + name + "': root cells must share one level");
  if (dirichlet.empty()) throw std::invalid_argument("scenario '" + name + "': Dirichlet boundary is empty");
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0))
    throw std::invalid_argument("scenario '" + name + "': volume fraction must lie in (0,1)");
  if (!material.admissible()) throw std::invalid_argument("scenario '" + name + "': material not elliptic");
  for (const auto& d : dirichlet)
    for (const auto& l : loads) {
      if (l.segment.length() == 0.0) continue;
      const auto [t0, t1] = d.segment.overlap(l.segment.a, l.segment.b);
      if (t1 - t0 > 1e-12)
        throw std::invalid_argument("scenario '" + name + "': Dirichlet and load segments overlap");
    }
}

Scenario Scenario::carrier() {
  Scenario s;
  s.name = "carrier";
  s.shape = DomainShape::unit_square;
  s.roots = {{0, 0, 0}};
  s.dirichlet = {{{Vec2(0, 0), Vec2(1, 0)}, true, true, Vec2::Zero()}};
  s.loads = {{{Vec2(0, 1), Vec2(1, 1)}, Vec2(1.0, 0.0)}};
  s.volume_fraction = 0.67;
  s.initial_level = 3;
  return s;
}

Scenario Scenario::cantilever(double load_width) {
  Scenario s;
  s.name = "cantilever";
  s.shape = DomainShape::rectangle;
  s.roots = {{1, 0, 0}, {1, 1, 0}};
  s.dirichlet = {{{Vec2(0, 0), Vec2(0, 0.5)}, true, true, Vec2::Zero()}};
  const double c = 0.25, h = 0.5 * load_width;
  s.loads = {{{Vec2(1, c - h), Vec2(1, c + h)}, Vec2(0.0, -1.0)}};
  s.volume_fraction = 0.5;
  s.initial_level = 4;
  return s;
}

Scenario Scenario::bridge(double support_width) {
  Scenario s;
  s.name = "bridge";
  s.shape = DomainShape::rectangle;
  s.roots = {{1, 0, 0}, {1, 1, 0}};
  // Rollers keep only the vertical component; one point pin removes the horizontal rigid mode.
  s.dirichlet = {
      {{Vec2(0, 0), Vec2(support_width, 0)}, false, true, Vec2::Zero()},
      {{Vec2(1 - support_width, 0), Vec2(1, 0)}, false, true, Vec2::Zero()},
      {{Vec2(0, 0), Vec2(0, 0)}, true, false, Vec2::Zero()},
  };
  s.loads = {{{Vec2(support_width, 0), Vec2(1 - support_width, 0)}, Vec2(0.0, -1.0)}};
  s.volume_fraction = 0.67;
  s.initial_level = 4;
  return s;
}

Scenario Scenario::lshape(double load_width) {
  Scenario s;
  s.name = "lshape";
  s.shape = DomainShape::l_shape;
  s.roots = {{1, 0, 0}, {1, 1, 0}, {1, 0, 1}};
  s.dirichlet = {{{Vec2(0, 1), Vec2(0.5, 1)}, true, true, Vec2::Zero()}};
  const double c = 0.25, h = 0.5 * load_width;
  s.loads = {{{Vec2(1, c - h), Vec2(1, c + h)}, Vec2(0.0, -1.0)}};
  s.volume_fraction = 0.67;
  s.initial_level = 4;
  return s;
}

Scenario Scenario::by_name(const std::string& name, double load_width) {
  if (name == "carrier") return carrier();
  if (name == "cantilever") return cantilever(load_width > 0 ? load_width : 0.05 * 0.5);
  if (name == "bridge") return bridge();
  if (name == "lshape") return lshape(load_width > 0 ? load_width : 0.05);
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

}  // namespace twoscale
