#pragma once

// Spatial constraint regions, state-index geometry and constraint specs for
// constrained sensor selection.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sensorplace/error.hpp"
#include "sensorplace/expression.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace {

struct Point {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> z;
};

inline double distance(const Point& a, const Point& b) {
  const double dz = (a.z && b.z) ? *a.z - *b.z : 0.0;
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + dz * dz);
}

enum class Location { In, Out };

struct Circle {
  double cx, cy, radius;
};

/// Semi-axes a (along the rotated x axis) and b; angle in degrees,
/// counter-clockwise.
struct Ellipse {
  double cx, cy, a, b, angle_deg = 0.0;
};

struct Polygon {
  std::vector<Point> vertices;
};

/// Closed half-plane bounded by the line through (x1,y1)-(x2,y2). Left means
/// the side to the left when walking from the first point to the second.
struct Line {
  enum class Side { Left, Right };
  double x1, y1, x2, y2;
  Side side = Side::Left;
};

/// Parabola with the given vertex and focal length opening toward
/// `orientation`. Inside is the region containing the focus.
struct Parabola {
  enum class Orientation { Up, Down, Left, Right };
  enum class Side { Inside, Outside };
  double vx, vy, focal;
  Orientation orientation = Orientation::Up;
  Side side = Side::Inside;
};

/// Finite cylinder whose axis is parallel to a coordinate axis. (c1, c2) are
/// the axis position in the two remaining coordinates, in x, y, z order.
struct Cylinder {
  enum class Axis { X, Y, Z };
  Axis axis = Axis::Z;
  double c1, c2, radius, lo, hi;
};

struct UserDefined {
  expr::Inequality inequality;
  std::string source;
};

using Shape = std::variant<Circle, Ellipse, Polygon, Line, Parabola, Cylinder, UserDefined>;

namespace detail {

inline void require_planar(const Point& p, const char* shape) {
  if (p.z) throw Error(ErrorCode::InvalidPoint, std::string(shape) + " expects a 2-D point");
}

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(const Point& p, const Point& a, const Point& b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const double tol = 1e-12 * std::max(1.0, len);
  if (std::abs(cross(a, b, p)) > tol * std::max(1.0, len)) return false;
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

inline int orientation_sign(const Point& a, const Point& b, const Point& c) {
  const double v = cross(a, b, c);
  return (v > 0) - (v < 0);
}

inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orientation_sign(p1, p2, q1), o2 = orientation_sign(p1, p2, q2);
  const int o3 = orientation_sign(q1, q2, p1), o4 = orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(q1, p1, p2)) || (o2 == 0 && on_segment(q2, p1, p2)) ||
         (o3 == 0 && on_segment(p1, q1, q2)) || (o4 == 0 && on_segment(p2, q1, q2));
}

// Even-odd ray casting toward +x; boundary points are reported inside.
inline bool polygon_contains(const std::vector<Point>& v, const Point& p) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if (on_segment(p, v[j], v[i])) return true;
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x_cross = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

inline void validate(const Circle& c) {
  if (!(c.radius > 0)) throw Error(ErrorCode::InvalidInput, "circle radius must be positive");
}
inline void validate(const Ellipse& e) {
  if (!(e.a > 0) || !(e.b > 0)) throw Error(ErrorCode::InvalidInput, "ellipse semi-axes must be positive");
}
inline void validate(const Polygon& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) throw Error(ErrorCode::InvalidInput, "polygon needs at least 3 vertices");
  for (const auto& p : v) require_planar(p, "polygon vertex");
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
        throw Error(ErrorCode::InvalidInput, "polygon edges self-intersect");
      }
    }
  }
}
inline void validate(const Line& l) {
  if (l.x1 == l.x2 && l.y1 == l.y2) throw Error(ErrorCode::InvalidInput, "line endpoints coincide");
}
inline void validate(const Parabola& p) {
  if (!(p.focal > 0)) throw Error(ErrorCode::InvalidInput, "parabola focal length must be positive");
}
inline void validate(const Cylinder& c) {
  if (!(c.radius > 0)) throw Error(ErrorCode::InvalidInput, "cylinder radius must be positive");
  if (!(c.lo <= c.hi)) throw Error(ErrorCode::InvalidInput, "cylinder range is empty");
}
inline void validate(const UserDefined&) {}

}  // namespace detail

inline bool shape_contains(const Shape& shape, const Point& p) {
  struct Visitor {
    const Point& p;
    bool operator()(const Circle& c) const {
      detail::require_planar(p, "circle");
      const double dx = p.x - c.cx, dy = p.y - c.cy;
      return dx * dx + dy * dy <= c.radius * c.radius;
    }
    bool operator()(const Ellipse& e) const {
      detail::require_planar(p, "ellipse");
      const double t = e.angle_deg * std::numbers::pi / 180.0;
      const double dx = p.x - e.cx, dy = p.y - e.cy;
      const double u = std::cos(t) * dx + std::sin(t) * dy;
      const double v = -std::sin(t) * dx + std::cos(t) * dy;
      return (u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0;
    }
    bool operator()(const Polygon& poly) const {
      detail::require_planar(p, "polygon");
      return detail::polygon_contains(poly.vertices, p);
    }
    bool operator()(const Line& l) const {
      detail::require_planar(p, "line");
      const double c = (l.x2 - l.x1) * (p.y - l.y1) - (l.y2 - l.y1) * (p.x - l.x1);
      return l.side == Line::Side::Left ? c >= 0.0 : c <= 0.0;
    }
    bool operator()(const Parabola& pb) const {
      detail::require_planar(p, "parabola");
      double along = 0.0, across = 0.0;
      switch (pb.orientation) {
        case Parabola::Orientation::Up: along = p.y - pb.vy; across = p.x - pb.vx; break;
        case Parabola::Orientation::Down: along = pb.vy - p.y; across = p.x - pb.vx; break;
        case Parabola::Orientation::Right: along = p.x - pb.vx; across = p.y - pb.vy; break;
        case Parabola::Orientation::Left: along = pb.vx - p.x; across = p.y - pb.vy; break;
      }
      const double curve = across * across / (4.0 * pb.focal);
      return pb.side == Parabola::Side::Inside ? along >= curve : along <= curve;
    }
    bool operator()(const Cylinder& c) const {
      if (!p.z) throw Error(ErrorCode::InvalidPoint, "cylinder expects a 3-D point");
      const double coords[3] = {p.x, p.y, *p.z};
      const int a = static_cast<int>(c.axis);
      const double along = coords[a];
      const double u = coords[(a + 1) % 3 < (a + 2) % 3 ? (a + 1) % 3 : (a + 2) % 3];
      const double v = coords[(a + 1) % 3 < (a + 2) % 3 ? (a + 2) % 3 : (a + 1) % 3];
      const double du = u - c.c1, dv = v - c.c2;
      return along >= c.lo && along <= c.hi && du * du + dv * dv <= c.radius * c.radius;
    }
    bool operator()(const UserDefined& u) const {
      return u.inequality.holds(expr::Bindings{p.x, p.y, p.z});
    }
  };
  return std::visit(Visitor{p}, shape);
}

/// A shape plus whether the constrained set is its interior or complement.
class ConstraintRegion {
 public:
  explicit ConstraintRegion(Shape shape, Location loc = Location::In) : shape_(std::move(shape)), loc_(loc) {
    std::visit([](const auto& s) { detail::validate(s); }, shape_);
  }

  /// Closed-set membership: boundary points belong to the shape.
  bool contains(const Point& p) const { return shape_contains(shape_, p) != (loc_ == Location::Out); }

  const Shape& shape() const noexcept { return shape_; }
  Location location() const noexcept { return loc_; }

 private:
  Shape shape_;
  Location loc_;
};

/// Parses an inequality string into a user-defined region.
inline ConstraintRegion parse_constraint_expression(std::string_view text, Location loc = Location::In) {
  return ConstraintRegion(UserDefined{expr::parse(text), std::string(text)}, loc);
}

/// Row-major image: state index = row * width + col, mapped to (x = col, y = row).
struct ImageGrid {
  Index height = 0;
  Index width = 0;
};

struct PointCloud {
  std::vector<Point> coords;
};

class GridGeometry {
 public:
  GridGeometry(ImageGrid grid) : layout_(grid) {
    if (grid.height == 0 || grid.width == 0) throw Error(ErrorCode::InvalidInput, "image grid must be nonempty");
  }
  GridGeometry(PointCloud cloud) : layout_(std::move(cloud)) {
    if (std::get<PointCloud>(layout_).coords.empty()) {
      throw Error(ErrorCode::InvalidInput, "point cloud must be nonempty");
    }
  }

  Index size() const {
    if (const auto* g = std::get_if<ImageGrid>(&layout_)) return g->height * g->width;
    return std::get<PointCloud>(layout_).coords.size();
  }

  Point point(Index i) const {
    if (i >= size()) throw Error(ErrorCode::InvalidInput, "state index " + std::to_string(i) + " outside geometry");
    if (const auto* g = std::get_if<ImageGrid>(&layout_)) {
      return Point{static_cast<double>(i % g->width), static_cast<double>(i / g->width), std::nullopt};
    }
    return std::get<PointCloud>(layout_).coords[i];
  }

  const ImageGrid* image() const noexcept { return std::get_if<ImageGrid>(&layout_); }
  bool has_z() const {
    const auto* c = std::get_if<PointCloud>(&layout_);
    return c && !c->coords.empty() && c->coords.front().z.has_value();
  }

 private:
  std::variant<ImageGrid, PointCloud> layout_;
};

/// Ascending indices of the states whose coordinates lie in the region.
inline std::vector<Index> get_constraint_indices(const ConstraintRegion& region, const GridGeometry& geometry) {
  std::vector<Index> out;
  for (Index i = 0; i < geometry.size(); ++i) {
    if (region.contains(geometry.point(i))) out.push_back(i);
  }
  return out;
}

enum class ConstraintMode { MaxN, ExactN, Predetermined, Distance };

constexpr std::string_view to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::MaxN: return "max_n";
    case ConstraintMode::ExactN: return "exact_n";
    case ConstraintMode::Predetermined: return "predetermined";
    case ConstraintMode::Distance: return "distance";
  }
  return "unknown";
}

/// What a constrained selection must satisfy. `s` is the sensor count for
/// MaxN / ExactN / Predetermined, `d` the minimum pairwise distance for
/// Distance (which also needs the geometry).
struct ConstraintSpec {
  std::vector<Index> idx_constrained;
  ConstraintMode mode = ConstraintMode::MaxN;
  Index s = 0;
  double d = 0.0;
  std::optional<GridGeometry> geometry;
};

}  // namespace sensorplace
