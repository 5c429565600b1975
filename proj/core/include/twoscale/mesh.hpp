#pragma once

#include "twoscale/scenario.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace twoscale {

/// Deepest quadtree level supported; node coordinates are integers on a 2^-(kMaxLevel+1) lattice.
inline constexpr int kMaxLevel = 26;

/// Integer lattice position of a mesh node (Q2 nodes included).
struct NodeKey {
  std::int64_t x = 0;
  std::int64_t y = 0;

  bool operator==(const NodeKey&) const = default;
  auto operator<=>(const NodeKey&) const = default;
  Vec2 point() const;
  static NodeKey from_point(const Vec2& p);
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    return std::hash<std::int64_t>()((k.x << 31) ^ k.y);
  }
};

/// Element sides, numbered so that side ^ 1 is the opposite one.
enum class Side : int { left = 0, right = 1, bottom = 2, top = 3 };

struct Element {
  int id = -1;
  int level = 0;
  std::int64_t ix = 0;  // lower-left corner in units of 2^-level
  std::int64_t iy = 0;
  int parent = -1;
  /// Children ordered (lower-left, lower-right, upper-left, upper-right).
  std::array<int, 4> children{-1, -1, -1, -1};

  bool leaf() const { return children[0] < 0; }
  double size() const;
  Vec2 lower_left() const;
  Vec2 center() const;
  double area() const { return size() * size(); }
};

/// What lies across one side of a leaf element.
struct Neighbor {
  enum class Kind { boundary, same, coarser, finer };
  Kind kind = Kind::boundary;
  /// One leaf for same/coarser; two leaves for finer, ordered along the side.
  std::vector<int> leaves;
};

/// Hanging Q2 node tied to the three nodes of the coarse edge it lies on.
struct HangingConstraint {
  NodeKey node;
  std::array<NodeKey, 3> masters;
  std::array<double, 3> weights;
};

/// 2:1-balanced quadtree of squares over a union of root cells.
///
/// Element ids are stable: refining only appends children, so an id refers to the same square for
/// the lifetime of a mesh and of every mesh refined from it.
class QuadMesh {
 public:
  /// Uniform mesh with elements of size 2^-level. Throws for level < 1 or level below the roots.
  static QuadMesh build(const Scenario& scenario, int level);

  /// Refines the marked leaves plus whatever closure keeps the 2:1 balance.
  QuadMesh refined(std::span<const int> marked) const;

  const Element& element(int id) const { return elements_[static_cast<std::size_t>(id)]; }
  std::size_t num_elements_total() const { return elements_.size(); }
  /// Leaf ids in ascending order.
  const std::vector<int>& leaves() const { return leaves_; }
  std::size_t num_leaves() const { return leaves_.size(); }
  /// Position of a leaf in leaves(); -1 for inner elements.
  int leaf_index(int id) const { return leaf_index_[static_cast<std::size_t>(id)]; }

  Neighbor neighbor(int id, Side side) const;
  /// Leaf containing p, or -1 outside the domain. Points on shared edges resolve to either side.
  int locate(const Vec2& p) const;

  /// Q2 node keys of a leaf in lexicographic order (index = 3*j + i).
  std::array<NodeKey, 9> q2_nodes(int id) const;
  std::vector<HangingConstraint> hanging_constraints() const;

  /// Corner points of side s, oriented counter-clockwise around the element.
  std::pair<Vec2, Vec2> side_points(int id, Side s) const;

  double area() const;
  int max_level() const;

  // Structural checks used by tests and after refinement.
  bool is_balanced() const;
  bool tiles_domain() const;
  bool siblings_complete() const;

  /// Plain-text dump: element records followed by constraint records.
  void dump(std::ostream& os) const;

  const std::vector<RootCell>& roots() const { return roots_; }

 private:
  struct CellKey {
    int level;
    std::int64_t ix, iy;
    bool operator==(const CellKey&) const = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      return std::hash<std::int64_t>()((static_cast<std::int64_t>(k.level) << 56) ^ (k.ix << 28) ^ k.iy);
    }
  };

  int add_element(int level, std::int64_t ix, std::int64_t iy, int parent);
  void split(int id);
  void refine_with_closure(int id);
  /// Leaf covering the cell (level, ix, iy) if it is at that level or coarser; nullopt if the cell
  /// lies outside the domain; -2 if the cell is subdivided further.
  std::optional<int> covering_leaf(int level, std::int64_t ix, std::int64_t iy) const;
  void rebuild_leaves();

  std::vector<RootCell> roots_;
  std::vector<Element> elements_;
  std::vector<int> leaves_;
  std::vector<int> leaf_index_;
  std::unordered_map<CellKey, int, CellKeyHash> cells_;
};

/// Smallest set of elements (by decreasing indicator, ties by position) carrying at least
/// fraction * total. Indicators are indexed like `ids`.
std::vector<int> mark_doerfler(std::span<const double> indicators, std::span<const int> ids, double fraction);

}  // namespace twoscale
