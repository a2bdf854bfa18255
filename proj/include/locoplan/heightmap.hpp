#pragma once

#include "locoplan/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace locoplan {

/// 2.5D elevation grid. Heights are quantized to spec().z_resolution on every
/// write; cells without data are flagged unknown and excluded from queries.
class HeightMap {
 public:
  explicit HeightMap(GridSpec spec);

  const GridSpec& spec() const { return spec_; }

  void set_height(const CellIndex& cell, double z);
  void set_unknown(const CellIndex& cell);
  void fill(double z);

  bool known(const CellIndex& cell) const;
  std::size_t known_count() const;

  /// Quantized height of a known cell. Throws on out-of-bounds or unknown.
  double height(const CellIndex& cell) const;

  /// Height of the cell containing `xy`. Throws on out-of-bounds or unknown.
  double height_at(const Vec2& xy) const;

  /// As height_at, but nullopt instead of throwing.
  std::optional<double> try_height_at(const Vec2& xy) const;

  /// 3D points (cell center, height) of all known cells whose center lies in
  /// the axis-aligned square window (side length `window`) centered on `cell`,
  /// the query cell included. Consumers that need a surface fit must check
  /// for at least 3 points.
  std::vector<Vec3> neighborhood(const CellIndex& cell, double window) const;

  /// Plain-text format: one header line
  ///   nx ny resolution_xy z_resolution origin_x origin_y
  /// followed by nx*ny whitespace-separated heights in row-major order
  /// (y rows, x fastest), "nan" for unknown cells.
  static HeightMap load(const std::string& path);
  void save(const std::string& path) const;

 private:
  GridSpec spec_;
  std::vector<double> heights_;
  std::vector<std::uint8_t> known_;
};

}  // namespace locoplan
