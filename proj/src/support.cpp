#include "locoplan/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace locoplan {

double min_slack(std::span<const SupportLine> lines, const Vec2& p) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& l : lines) m = std::min(m, line_slack(l, p));
  return m;
}

namespace {
double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Clips a ccw polygon against a half-plane (keep slack >= 0).
std::vector<Vec2> clip(const std::vector<Vec2>& poly, const SupportLine& l) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double sc = line_slack(l, cur);
    const double sn = line_slack(l, nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}
}  // namespace

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  if (points.size() < 3) throw std::invalid_argument("convex_hull: need at least 3 points");
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a == b; }),
            pts.end());

  // Monotone chain.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], *it) <= 0.0) --k;
    hull[k++] = *it;
  }
  hull.resize(k > 0 ? k - 1 : 0);
  if (hull.size() < 3) throw std::invalid_argument("convex_hull: points are collinear");
  return hull;
}

std::vector<SupportLine> shrunk_support_lines(std::span<const Vec2> feet, double margin) {
  if (margin < 0.0) throw std::invalid_argument("shrunk_support_lines: negative margin");
  const auto hull = convex_hull(feet);

  std::vector<SupportLine> lines;
  lines.reserve(hull.size());
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    const Vec2 dir = (b - a).normalized();
    const Vec2 inward(-dir.y(), dir.x());  // interior is left of a ccw edge
    lines.push_back({inward.x(), inward.y(), -inward.dot(a) - margin});
  }

  // Shrinking may empty the region; detect by clipping the hull itself.
  std::vector<Vec2> region(hull.begin(), hull.end());
  for (const auto& l : lines) {
    region = clip(region, l);
    if (region.size() < 3) break;
  }
  if (region.size() < 3 || polygon_area(region) <= 1e-12)
    throw std::invalid_argument("shrunk_support_lines: margin empties the support region");
  return lines;
}

std::vector<Vec2> shrunk_support_polygon(std::span<const Vec2> feet, double margin) {
  const auto lines = shrunk_support_lines(feet, margin);
  std::vector<Vec2> region = convex_hull(feet);
  for (const auto& l : lines) region = clip(region, l);
  return region;
}

double triangle_inradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  const double s = 0.5 * (la + lb + lc);
  if (s <= 0.0) return 0.0;
  const double area = 0.5 * std::abs(cross2(a, b, c));
  return area / s;
}

}  // namespace locoplan
