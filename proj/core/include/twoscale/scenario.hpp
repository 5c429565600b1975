#pragma once

#include "twoscale/tensor.hpp"

#include <string>
#include <vector>

namespace twoscale {

/// Axis-aligned straight piece of the domain boundary, a -> b.
struct Segment {
  Vec2 a;
  Vec2 b;

  double length() const { return (b - a).norm(); }
  /// True if p lies on the segment (within tol).
  bool contains(const Vec2& p, double tol = 1e-12) const;
  /// Parameter interval [t0, t1] of the straight piece p0 -> p1 covered by this segment,
  /// empty (t0 >= t1) if they do not overlap collinearly.
  std::pair<double, double> overlap(const Vec2& p0, const Vec2& p1, double tol = 1e-12) const;
};

/// Dirichlet support on a boundary segment. Only components flagged fixed are prescribed.
struct DirichletSegment {
  Segment segment;
  bool fix_x = true;
  bool fix_y = true;
  Vec2 value = Vec2::Zero();
};

/// Surface traction g (force per length) on a boundary segment.
struct LoadSegment {
  Segment segment;
  Vec2 traction = Vec2::Zero();
};

enum class DomainShape { unit_square, rectangle, l_shape };

/// Root cell of the macro quadtree: square [ix, ix+1] x [iy, iy+1] scaled by 2^-level.
struct RootCell {
  int level = 0;
  long ix = 0;
  long iy = 0;
};

/// Macroscopic load case: domain, supports, loads and the hard-material volume fraction.
struct Scenario {
  std::string name;
  DomainShape shape = DomainShape::unit_square;
  std::vector<RootCell> roots;
  std::vector<DirichletSegment> dirichlet;
  std::vector<LoadSegment> loads;
  double volume_fraction = 0.67;
  int initial_level = 3;
  IsotropicMaterial material{};

  double area() const;
  int root_level() const;
  /// Throws std::invalid_argument naming the violated condition.
  void validate() const;

  static Scenario carrier();
  static Scenario cantilever(double load_width = 0.05 * 0.5);
  static Scenario bridge(double support_width = 0.05);
  static Scenario lshape(double load_width = 0.05);
  /// Scenario by name (carrier|cantilever|bridge|lshape); load_width <= 0 selects the default.
  static Scenario by_name(const std::string& name, double load_width = -1.0);
};

}  // namespace twoscale
