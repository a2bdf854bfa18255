#include "locoplan/heightmap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace locoplan {

void GridSpec::validate() const {
  if (resolution <= 0.0) throw std::invalid_argument("GridSpec: resolution must be > 0");
  if (z_resolution <= 0.0) throw std::invalid_argument("GridSpec: z_resolution must be > 0");
  if (nx < 1 || ny < 1) throw std::invalid_argument("GridSpec: dims must be at least 1x1");
}

std::optional<CellIndex> GridSpec::cell_at(const Vec2& xy) const {
  const Vec2 local = xy - origin;
  const int ix = static_cast<int>(std::floor(local.x() / resolution));
  const int iy = static_cast<int>(std::floor(local.y() / resolution));
  const CellIndex c{ix, iy};
  if (!contains(c)) return std::nullopt;
  return c;
}

HeightMap::HeightMap(GridSpec spec) : spec_(spec) {
  spec_.validate();
  heights_.assign(spec_.cell_count(), 0.0);
  known_.assign(spec_.cell_count(), 0);
}

void HeightMap::set_height(const CellIndex& cell, double z) {
  if (!spec_.contains(cell)) throw std::out_of_range("HeightMap::set_height: cell out of bounds");
  if (!std::isfinite(z)) throw std::invalid_argument("HeightMap::set_height: non-finite height");
  const double level = std::round(z / spec_.z_resolution);
  heights_[spec_.flat(cell)] = level * spec_.z_resolution;
  known_[spec_.flat(cell)] = 1;
}

void HeightMap::set_unknown(const CellIndex& cell) {
  if (!spec_.contains(cell)) throw std::out_of_range("HeightMap::set_unknown: cell out of bounds");
  known_[spec_.flat(cell)] = 0;
}

void HeightMap::fill(double z) {
  for (int y = 0; y < spec_.ny; ++y)
    for (int x = 0; x < spec_.nx; ++x) set_height({x, y}, z);
}

bool HeightMap::known(const CellIndex& cell) const {
  return spec_.contains(cell) && known_[spec_.flat(cell)] != 0;
}

std::size_t HeightMap::known_count() const {
  std::size_t n = 0;
  for (auto k : known_) n += k;
  return n;
}

double HeightMap::height(const CellIndex& cell) const {
  if (!spec_.contains(cell)) throw std::out_of_range("HeightMap::height: cell out of bounds");
  if (!known_[spec_.flat(cell)]) throw std::runtime_error("HeightMap::height: unknown cell");
  return heights_[spec_.flat(cell)];
}

double HeightMap::height_at(const Vec2& xy) const {
  const auto cell = spec_.cell_at(xy);
  if (!cell) throw std::out_of_range("HeightMap::height_at: position outside grid");
  return height(*cell);
}

std::optional<double> HeightMap::try_height_at(const Vec2& xy) const {
  const auto cell = spec_.cell_at(xy);
  if (!cell || !known_[spec_.flat(*cell)]) return std::nullopt;
  return heights_[spec_.flat(*cell)];
}

std::vector<Vec3> HeightMap::neighborhood(const CellIndex& cell, double window) const {
  if (!spec_.contains(cell)) throw std::out_of_range("HeightMap::neighborhood: cell out of bounds");
  if (window < spec_.resolution)
    throw std::invalid_argument("HeightMap::neighborhood: window smaller than resolution");
  // Half-width padded against round-off so cells sitting exactly on the
  // window boundary are kept.
  const double half = window / 2.0 + 1e-9;
  const int reach = static_cast<int>(std::floor(half / spec_.resolution));

  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(2 * reach + 1) * (2 * reach + 1));
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const CellIndex c{cell.x + dx, cell.y + dy};
      if (!spec_.contains(c) || !known_[spec_.flat(c)]) continue;
      if (std::abs(dx) * spec_.resolution > half || std::abs(dy) * spec_.resolution > half)
        continue;
      const Vec2 center = spec_.cell_center(c);
      points.emplace_back(center.x(), center.y(), heights_[spec_.flat(c)]);
    }
  }
  return points;
}

HeightMap HeightMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("HeightMap::load: cannot open " + path);
  GridSpec spec;
  if (!(in >> spec.nx >> spec.ny >> spec.resolution >> spec.z_resolution >> spec.origin.x() >>
        spec.origin.y()))
    throw std::runtime_error("HeightMap::load: malformed header in " + path);
  HeightMap hm(spec);
  std::string token;
  for (int y = 0; y < spec.ny; ++y) {
    for (int x = 0; x < spec.nx; ++x) {
      if (!(in >> token)) throw std::runtime_error("HeightMap::load: truncated data in " + path);
      if (token == "nan" || token == "NaN" || token == "NAN") continue;
      hm.set_height({x, y}, std::stod(token));
    }
  }
  return hm;
}

void HeightMap::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("HeightMap::save: cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g\n", spec_.nx, spec_.ny,
                spec_.resolution, spec_.z_resolution, spec_.origin.x(), spec_.origin.y());
  out << buf;
  for (int y = 0; y < spec_.ny; ++y) {
    for (int x = 0; x < spec_.nx; ++x) {
      const std::size_t i = spec_.flat({x, y});
      if (known_[i]) {
        std::snprintf(buf, sizeof(buf), "%.17g", heights_[i]);
        out << buf;
      } else {
        out << "nan";
      }
      out << (x + 1 == spec_.nx ? '\n' : ' ');
    }
  }
  if (!out) throw std::runtime_error("HeightMap::save: write failed for " + path);
}

}  // namespace locoplan
