#pragma once

#include "locoplan/grid.hpp"

#include <span>
#include <vector>

namespace locoplan {

/// Oriented half-plane a*x + b*y + c > 0 with (a,b) unit length, so the
/// signed slack equals the distance to the boundary.
struct SupportLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline double line_slack(const SupportLine& l, const Vec2& p) {
  return l.a * p.x() + l.b * p.y() + l.c;
}

double min_slack(std::span<const SupportLine> lines, const Vec2& p);

/// Convex hull in counter-clockwise order; collinear inputs throw.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

/// Edge lines of the convex hull of the stance feet, each moved inward by
/// `margin`. Throws if fewer than 3 feet, collinear feet, or the margin
/// empties the region.
std::vector<SupportLine> shrunk_support_lines(std::span<const Vec2> feet, double margin);

/// Vertices (ccw) of the shrunk region; same error conditions.
std::vector<Vec2> shrunk_support_polygon(std::span<const Vec2> feet, double margin);

/// Inscribed-circle radius of the triangle (a,b,c); 0 for degenerate triangles.
double triangle_inradius(const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace locoplan
