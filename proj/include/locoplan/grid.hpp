#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>

namespace locoplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct CellIndex {
  int x = 0;
  int y = 0;

  bool operator==(const CellIndex&) const = default;
};

/// Geometry of a regular 2.5D grid. `origin` is the world position of the
/// lower-left corner of cell (0,0); cell centers sit at origin + (i+0.5)*res.
struct GridSpec {
  Vec2 origin{0.0, 0.0};
  double resolution = 0.02;    // cell edge length [m]
  int nx = 1;
  int ny = 1;
  double z_resolution = 0.01;  // height quantum [m]

  void validate() const;

  std::size_t cell_count() const { return static_cast<std::size_t>(nx) * ny; }

  bool contains(const CellIndex& c) const {
    return c.x >= 0 && c.x < nx && c.y >= 0 && c.y < ny;
  }

  std::size_t flat(const CellIndex& c) const {
    return static_cast<std::size_t>(c.y) * nx + c.x;
  }

  Vec2 cell_center(const CellIndex& c) const {
    return origin + Vec2((c.x + 0.5) * resolution, (c.y + 0.5) * resolution);
  }

  /// Cell containing the query point, or nullopt when the point lies outside
  /// the grid rectangle.
  std::optional<CellIndex> cell_at(const Vec2& xy) const;

  Vec2 min_corner() const { return origin; }
  Vec2 max_corner() const {
    return origin + Vec2(nx * resolution, ny * resolution);
  }
};

/// Axis-aligned rectangle in world coordinates (e.g. a costmap area of
/// interest).
struct Rect {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  bool empty() const { return min.x() >= max.x() || min.y() >= max.y(); }
};

}  // namespace locoplan
