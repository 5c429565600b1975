#include "twoscale/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace twoscale {

namespace {

constexpr int kLatticeBits = kMaxLevel + 1;

std::int64_t lattice_size(int level) { return std::int64_t{1} << (kLatticeBits - level); }

// Offsets (dx, dy) of the neighboring cell across each side.
constexpr std::array<std::array<int, 2>, 4> kSideOffset{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};

}  // namespace

Vec2 NodeKey::point() const {
  return {std::ldexp(static_cast<double>(x), -kLatticeBits), std::ldexp(static_cast<double>(y), -kLatticeBits)};
}

NodeKey NodeKey::from_point(const Vec2& p) {
  return {std::llround(std::ldexp(p.x(), kLatticeBits)), std::llround(std::ldexp(p.y(), kLatticeBits))};
}

double Element::size() const { return std::ldexp(1.0, -level); }

Vec2 Element::lower_left() const {
  return {static_cast<double>(ix) * size(), static_cast<double>(iy) * size()};
}

Vec2 Element::center() const { return lower_left() + Vec2::Constant(0.5 * size()); }

QuadMesh QuadMesh::build(const Scenario& scenario, int level) {
  if (level < 1) throw std::invalid_argument("initial level must be >= 1");
  if (level > kMaxLevel) throw std::invalid_argument("initial level exceeds the supported depth");
  if (scenario.roots.empty()) throw std::invalid_argument("scenario has no root cells");
  const int root_level = scenario.root_level();
  if (level < root_level)
    throw std::invalid_argument("initial level " + std::to_string(level) + " is coarser than the domain cells");

  QuadMesh mesh;
  mesh.roots_ = scenario.roots;
  for (const auto& r : scenario.roots) mesh.add_element(r.level, r.ix, r.iy, -1);
  // Uniform subdivision down to the requested level.
  for (int l = root_level; l < level; ++l) {
    const std::size_t n = mesh.elements_.size();
    for (std::size_t id = 0; id < n; ++id)
      if (mesh.elements_[id].leaf() && mesh.elements_[id].level == l) mesh.split(static_cast<int>(id));
  }
  mesh.rebuild_leaves();
  return mesh;
}

int QuadMesh::add_element(int level, std::int64_t ix, std::int64_t iy, int parent) {
  Element e;
  e.id = static_cast<int>(elements_.size());
  e.level = level;
  e.ix = ix;
  e.iy = iy;
  e.parent = parent;
  elements_.push_back(e);
  cells_.emplace(CellKey{level, ix, iy}, e.id);
  return e.id;
}

void QuadMesh::split(int id) {
  if (elements_[id].level >= kMaxLevel) throw std::runtime_error("refinement exceeds the supported depth");
  const Element e = elements_[id];
  std::array<int, 4> kids{};
  for (int c = 0; c < 4; ++c)
    kids[c] = add_element(e.level + 1, 2 * e.ix + (c & 1), 2 * e.iy + (c >> 1), id);
  elements_[id].children = kids;
}

std::optional<int> QuadMesh::covering_leaf(int level, std::int64_t ix, std::int64_t iy) const {
  if (ix < 0 || iy < 0) return std::nullopt;
  for (int l = level; l >= 0; --l) {
    const int shift = level - l;
    const auto it = cells_.find(CellKey{l, ix >> shift, iy >> shift});
    if (it == cells_.end()) continue;
    const Element& e = elements_[it->second];
    if (e.leaf()) return e.id;
    // Found an inner cell: only possible at the query level itself (finer coverage).
    return -2;
  }
  return std::nullopt;
}

void QuadMesh::refine_with_closure(int id) {
  if (!elements_[id].leaf()) return;
  const Element e = elements_[id];
  for (const auto& off : kSideOffset) {
    const auto nb = covering_leaf(e.level, e.ix + off[0], e.iy + off[1]);
    if (nb && *nb >= 0 && elements_[*nb].level < e.level) refine_with_closure(*nb);
  }
  split(id);
}

QuadMesh QuadMesh::refined(std::span<const int> marked) const {
  QuadMesh out = *this;
  for (int id : marked) {
    if (id < 0 || static_cast<std::size_t>(id) >= elements_.size() || !elements_[id].leaf())
      throw std::invalid_argument("refine: element " + std::to_string(id) + " is not a leaf");
  }
  for (int id : marked) out.refine_with_closure(id);
  out.rebuild_leaves();
  return out;
}

void QuadMesh::rebuild_leaves() {
  leaves_.clear();
  leaf_index_.assign(elements_.size(), -1);
  for (const auto& e : elements_)
    if (e.leaf()) {
      leaf_index_[e.id] = static_cast<int>(leaves_.size());
      leaves_.push_back(e.id);
    }
}

Neighbor QuadMesh::neighbor(int id, Side side) const {
  const Element& e = elements_[id];
  const auto off = kSideOffset[static_cast<int>(side)];
  Neighbor nb;
  const auto hit = covering_leaf(e.level, e.ix + off[0], e.iy + off[1]);
  if (!hit) return nb;
  if (*hit >= 0) {
    nb.kind = elements_[*hit].level == e.level ? Neighbor::Kind::same : Neighbor::Kind::coarser;
    nb.leaves = {*hit};
    return nb;
  }
  // Finer: the two children of the same-level cell touching this side, ordered along the side.
  const auto it = cells_.find(CellKey{e.level, e.ix + off[0], e.iy + off[1]});
  const auto& kids = elements_[it->second].children;
  std::array<int, 2> pick{};
  switch (side) {
    case Side::left: pick = {1, 3}; break;
    case Side::right: pick = {0, 2}; break;
    case Side::bottom: pick = {2, 3}; break;
    case Side::top: pick = {0, 1}; break;
  }
  nb.kind = Neighbor::Kind::finer;
  for (int c : pick) {
    const int kid = kids[c];
    if (!elements_[kid].leaf())
      throw std::logic_error("mesh is not 2:1 balanced across element " + std::to_string(id));
    nb.leaves.push_back(kid);
  }
  return nb;
}

int QuadMesh::locate(const Vec2& p) const {
  for (std::size_t r = 0; r < roots_.size(); ++r) {
    int id = static_cast<int>(r);
    const Element& root = elements_[id];
    const Vec2 ll = root.lower_left();
    const double h = root.size();
    const double tol = 1e-14;
    if (p.x() < ll.x() - tol || p.x() > ll.x() + h + tol || p.y() < ll.y() - tol || p.y() > ll.y() + h + tol)
      continue;
    while (!elements_[id].leaf()) {
      const Element& e = elements_[id];
      const Vec2 c = e.center();
      const int cx = p.x() >= c.x() ? 1 : 0;
      const int cy = p.y() >= c.y() ? 1 : 0;
      id = e.children[cx + 2 * cy];
    }
    return id;
  }
  return -1;
}

std::array<NodeKey, 9> QuadMesh::q2_nodes(int id) const {
  const Element& e = elements_[id];
  const std::int64_t s = lattice_size(e.level);
  const std::int64_t x0 = e.ix * s, y0 = e.iy * s;
  std::array<NodeKey, 9> keys;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) keys[3 * j + i] = {x0 + i * s / 2, y0 + j * s / 2};
  return keys;
}

std::pair<Vec2, Vec2> QuadMesh::side_points(int id, Side s) const {
  const Element& e = elements_[id];
  const Vec2 ll = e.lower_left();
  const double h = e.size();
  const Vec2 lr = ll + Vec2(h, 0), ul = ll + Vec2(0, h), ur = ll + Vec2(h, h);
  switch (s) {
    case Side::left: return {ul, ll};
    case Side::right: return {lr, ur};
    case Side::bottom: return {ll, lr};
    case Side::top: return {ur, ul};
  }
  return {ll, lr};
}

std::vector<HangingConstraint> QuadMesh::hanging_constraints() const {
  // Coarse-edge Q2 basis at the quarter points t = 1/4 and t = 3/4.
  constexpr std::array<double, 3> kQuarter{0.375, 0.75, -0.125};
  std::map<NodeKey, HangingConstraint> found;
  for (int id : leaves_) {
    for (int s = 0; s < 4; ++s) {
      const Neighbor nb = neighbor(id, static_cast<Side>(s));
      if (nb.kind != Neighbor::Kind::coarser) continue;
      const auto [p0, p1] = side_points(nb.leaves[0], static_cast<Side>(s ^ 1));
      const NodeKey a = NodeKey::from_point(p0), b = NodeKey::from_point(p1);
      const NodeKey m{(a.x + b.x) / 2, (a.y + b.y) / 2};
      const auto [q0, q1] = side_points(id, static_cast<Side>(s));
      const NodeKey h = NodeKey::from_point(0.5 * (q0 + q1));
      // Position of the hanging node along a -> b decides which quarter point it is.
      const double t = (h.point() - a.point()).dot(b.point() - a.point()) / (b.point() - a.point()).squaredNorm();
      HangingConstraint c;
      c.node = h;
      c.masters = {a, m, b};
      if (t < 0.5)
        c.weights = {kQuarter[0], kQuarter[1], kQuarter[2]};
      else
        c.weights = {kQuarter[2], kQuarter[1], kQuarter[0]};
      found.emplace(h, c);
    }
  }
  std::vector<HangingConstraint> out;
  out.reserve(found.size());
  for (auto& [k, c] : found) out.push_back(c);
  return out;
}

double QuadMesh::area() const {
  double a = 0.0;
  for (int id : leaves_) a += elements_[id].area();
  return a;
}

int QuadMesh::max_level() const {
  int m = 0;
  for (int id : leaves_) m = std::max(m, elements_[id].level);
  return m;
}

bool QuadMesh::is_balanced() const {
  for (int id : leaves_) {
    const Element& e = elements_[id];
    for (const auto& off : kSideOffset) {
      const auto nb = covering_leaf(e.level, e.ix + off[0], e.iy + off[1]);
      if (!nb) continue;
      if (*nb >= 0) {
        if (e.level - elements_[*nb].level > 1) return false;
        continue;
      }
      // Finer side: every leaf touching this side must be at most one level finer.
      const auto it = cells_.find(CellKey{e.level, e.ix + off[0], e.iy + off[1]});
      for (int kid : elements_[it->second].children)
        if (!elements_[kid].leaf()) {
          // A grandchild adjacent to e breaks balance; check adjacency of the child's sub-cells.
          const Element& k = elements_[kid];
          const bool touches = (off[0] == 1 && (k.ix & 1) == 0) || (off[0] == -1 && (k.ix & 1) == 1) ||
                               (off[1] == 1 && (k.iy & 1) == 0) || (off[1] == -1 && (k.iy & 1) == 1);
          if (touches) return false;
        }
    }
  }
  return true;
}

bool QuadMesh::tiles_domain() const {
  // Leaves are disjoint by construction of the tree; area equality then implies exact tiling.
  double root_area = 0.0;
  for (std::size_t r = 0; r < roots_.size(); ++r) root_area += elements_[r].area();
  for (int id : leaves_) {
    int a = id;
    while (elements_[a].parent >= 0) a = elements_[a].parent;
    if (a >= static_cast<int>(roots_.size())) return false;
  }
  return std::abs(area() - root_area) <= 1e-12 * root_area;
}

bool QuadMesh::siblings_complete() const {
  for (const auto& e : elements_) {
    if (e.parent < 0) continue;
    const auto& kids = elements_[e.parent].children;
    if (std::count(kids.begin(), kids.end(), e.id) != 1) return false;
    for (int k : kids)
      if (k < 0 || elements_[k].parent != e.parent) return false;
  }
  return true;
}

void QuadMesh::dump(std::ostream& os) const {
  os << "# elements: id level x0 y0 size\n";
  os << "elements " << leaves_.size() << '\n';
  os.precision(17);
  for (int id : leaves_) {
    const Element& e = elements_[id];
    const Vec2 ll = e.lower_left();
    os << id << ' ' << e.level << ' ' << ll.x() << ' ' << ll.y() << ' ' << e.size() << '\n';
  }
  const auto cons = hanging_constraints();
  os << "# constraints: x y then three (x y weight) masters\n";
  os << "constraints " << cons.size() << '\n';
  for (const auto& c : cons) {
    const Vec2 p = c.node.point();
    os << p.x() << ' ' << p.y();
    for (int m = 0; m < 3; ++m) {
      const Vec2 q = c.masters[m].point();
      os << ' ' << q.x() << ' ' << q.y() << ' ' << c.weights[m];
    }
    os << '\n';
  }
}

std::vector<int> mark_doerfler(std::span<const double> indicators, std::span<const int> ids, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("Doerfler fraction must lie in (0,1]");
  if (indicators.size() != ids.size()) throw std::invalid_argument("indicator/id size mismatch");
  double total = 0.0;
  for (double v : indicators) {
    if (!(v >= 0.0)) throw std::invalid_argument("indicators must be nonnegative");
    total += v;
  }
  std::vector<int> out;
  if (total <= 0.0) return out;
  std::vector<std::size_t> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (indicators[a] != indicators[b]) return indicators[a] > indicators[b];
    return ids[a] < ids[b];
  });
  const double target = fraction * total;
  double sum = 0.0;
  for (std::size_t k : order) {
    if (indicators[k] <= 0.0) break;
    out.push_back(ids[k]);
    sum += indicators[k];
    // Small relative slack so that exact-arithmetic ties (e.g. 0.5 of 1.0) stop where expected.
    if (sum >= target * (1.0 - 1e-14)) break;
  }
  return out;
}

}  // namespace twoscale
