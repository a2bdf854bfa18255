#include "locoplan/costmap.hpp"

#include "locoplan/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace locoplan {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_stddev(std::span<const Vec3> points) {
  double mean = 0.0;
  for (const auto& p : points) mean += p.z();
  mean /= static_cast<double>(points.size());
  double var = 0.0;
  for (const auto& p : points) var += (p.z() - mean) * (p.z() - mean);
  return std::sqrt(var / static_cast<double>(points.size()));
}
}  // namespace

void CostmapParams::validate() const {
  auto check_feature = [](const FeatureParams& p, const char* name) {
    if (!(p.flat_threshold >= 0.0 && p.flat_threshold < p.barrier))
      throw std::invalid_argument(std::string("CostmapParams: bad thresholds for ") + name);
    if (p.max_cost <= 0.0)
      throw std::invalid_argument(std::string("CostmapParams: max_cost must be > 0 for ") + name);
  };
  check_feature(height_dev, "height_dev");
  check_feature(slope, "slope");
  if (!(curvature.crack < curvature.mild_low && curvature.mild_low < curvature.mild_high &&
        curvature.mild_high <= curvature.max_value))
    throw std::invalid_argument("CostmapParams: curvature thresholds out of order");
  if ((weights.array() < 0.0).any() || weights.maxCoeff() <= 0.0)
    throw std::invalid_argument("CostmapParams: weights must be >= 0 with one > 0");
  if (height_dev_window <= 0.0 || slope_window <= 0.0)
    throw std::invalid_argument("CostmapParams: windows must be > 0");
}

double feature_cost(double f, const FeatureParams& p) {
  if (f <= p.flat_threshold) return 0.0;
  if (f >= p.barrier) return p.max_cost;
  const double ratio = (f - p.flat_threshold) / (p.barrier - p.flat_threshold);
  const double cost = -std::log(1.0 - ratio);
  return std::clamp(cost, 0.0, p.max_cost);
}

double curvature_cost(double c, const CurvatureParams& p) {
  if (c <= p.crack) return p.max_cost;
  if (c >= p.mild_high) return p.max_cost;
  if (c >= p.mild_low) return 0.0;
  // Between the crack barrier and the mild band; may exceed max_cost near the
  // barrier, normalization happens on the weighted total.
  return p.max_cost - std::log((c - p.crack) / (p.max_value - p.crack));
}

bool CostMap::valid(const CellIndex& cell) const {
  return spec_.contains(cell) && valid_[spec_.flat(cell)] != 0;
}

std::size_t CostMap::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_) n += v;
  return n;
}

double CostMap::total(const CellIndex& cell) const {
  if (!spec_.contains(cell)) throw std::out_of_range("CostMap::total: cell out of bounds");
  if (!valid_[spec_.flat(cell)]) throw std::runtime_error("CostMap::total: invalid cell");
  return total_[spec_.flat(cell)];
}

std::optional<double> CostMap::try_total_at(const Vec2& xy) const {
  const auto cell = spec_.cell_at(xy);
  if (!cell || !valid_[spec_.flat(*cell)]) return std::nullopt;
  return total_[spec_.flat(*cell)];
}

double CostMap::total_or(const Vec2& xy, double fallback) const {
  const auto t = try_total_at(xy);
  return t ? *t : fallback;
}

void CostMap::compute_cell(const HeightMap& hm, const CellIndex& local) {
  const std::size_t i = spec_.flat(local);
  const CellIndex hm_cell{local.x + hm_offset_.x, local.y + hm_offset_.y};

  auto mark_invalid = [&] {
    valid_[i] = 0;
    total_[i] = kNaN;
    layers_.height_dev[i] = layers_.slope[i] = layers_.curvature[i] = kNaN;
    layers_.height_dev_cost[i] = layers_.slope_cost[i] = layers_.curvature_cost[i] = kNaN;
  };
  // Unusable surface fit: conservative maximum risk.
  auto mark_risky = [&] {
    valid_[i] = 1;
    total_[i] = 1.0;
    layers_.height_dev[i] = layers_.slope[i] = layers_.curvature[i] = kNaN;
    layers_.height_dev_cost[i] = layers_.slope_cost[i] = layers_.curvature_cost[i] = kNaN;
  };

  if (!hm.known(hm_cell)) {
    mark_invalid();
    return;
  }

  const auto dev_points = hm.neighborhood(hm_cell, params_.height_dev_window);
  if (dev_points.size() < 3) {
    mark_risky();
    return;
  }
  const bool same_window = params_.slope_window == params_.height_dev_window;
  const auto slope_points =
      same_window ? dev_points : hm.neighborhood(hm_cell, params_.slope_window);
  if (slope_points.size() < 3) {
    mark_risky();
    return;
  }

  SurfaceEstimate surface;
  try {
    surface = estimate_surface(slope_points);
  } catch (const std::exception&) {
    mark_risky();
    return;
  }

  const double dev = population_stddev(dev_points);
  const double slope = slope_angle(surface);

  // Sign the curvature by where the neighborhood sits relative to the query
  // point along the normal: above = bowl-like (positive), below = convex.
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : slope_points) centroid += p;
  centroid /= static_cast<double>(slope_points.size());
  const Vec2 center = hm.spec().cell_center(hm_cell);
  const Vec3 query(center.x(), center.y(), hm.height(hm_cell));
  const double side = (centroid - query).dot(surface.normal);
  const double signed_curvature = side < 0.0 ? -surface.curvature : surface.curvature;
  const double mapped = params_.curvature_scale * signed_curvature + params_.curvature_offset;

  layers_.height_dev[i] = dev;
  layers_.slope[i] = slope;
  layers_.curvature[i] = mapped;
  layers_.height_dev_cost[i] = feature_cost(dev, params_.height_dev);
  layers_.slope_cost[i] = feature_cost(slope, params_.slope);
  layers_.curvature_cost[i] = curvature_cost(mapped, params_.curvature);

  const double costs[3] = {layers_.height_dev_cost[i], layers_.slope_cost[i],
                           layers_.curvature_cost[i]};
  const double ceilings[3] = {params_.height_dev.max_cost, params_.slope.max_cost,
                              params_.curvature.max_cost};
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (params_.weights(k) <= 0.0) continue;
    num += params_.weights(k) * costs[k];
    den += params_.weights(k) * ceilings[k];
  }
  total_[i] = std::clamp(num / den, 0.0, 1.0);
  valid_[i] = 1;
}

CostMap build_costmap(const HeightMap& hm, const CostmapParams& params, const Rect& aoi) {
  params.validate();
  if (aoi.empty()) throw std::invalid_argument("build_costmap: empty area of interest");

  const GridSpec& hspec = hm.spec();
  const double res = hspec.resolution;
  const int ix0 = std::max(0, static_cast<int>(std::floor((aoi.min.x() - hspec.origin.x()) / res)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((aoi.min.y() - hspec.origin.y()) / res)));
  const int ix1 =
      std::min(hspec.nx, static_cast<int>(std::ceil((aoi.max.x() - hspec.origin.x()) / res)));
  const int iy1 =
      std::min(hspec.ny, static_cast<int>(std::ceil((aoi.max.y() - hspec.origin.y()) / res)));
  if (ix0 >= ix1 || iy0 >= iy1)
    throw std::invalid_argument("build_costmap: area of interest misses the grid");

  CostMap cm;
  cm.spec_ = hspec;
  cm.spec_.nx = ix1 - ix0;
  cm.spec_.ny = iy1 - iy0;
  cm.spec_.origin = hspec.origin + Vec2(ix0 * res, iy0 * res);
  cm.hm_offset_ = {ix0, iy0};
  cm.params_ = params;

  const std::size_t n = cm.spec_.cell_count();
  cm.layers_.height_dev.assign(n, kNaN);
  cm.layers_.slope.assign(n, kNaN);
  cm.layers_.curvature.assign(n, kNaN);
  cm.layers_.height_dev_cost.assign(n, kNaN);
  cm.layers_.slope_cost.assign(n, kNaN);
  cm.layers_.curvature_cost.assign(n, kNaN);
  cm.total_.assign(n, kNaN);
  cm.valid_.assign(n, 0);

  for (int y = 0; y < cm.spec_.ny; ++y)
    for (int x = 0; x < cm.spec_.nx; ++x) cm.compute_cell(hm, {x, y});
  return cm;
}

void update_costmap(CostMap& cm, const HeightMap& hm, std::span<const CellIndex> edited) {
  const double half = cm.params_.max_window() / 2.0 + 1e-9;
  const int reach = static_cast<int>(std::floor(half / cm.spec_.resolution));

  std::unordered_set<std::size_t> pending;
  for (const auto& e : edited) {
    const CellIndex local{e.x - cm.hm_offset_.x, e.y - cm.hm_offset_.y};
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        const CellIndex c{local.x + dx, local.y + dy};
        if (cm.spec_.contains(c)) pending.insert(cm.spec_.flat(c));
      }
    }
  }
  for (const std::size_t i : pending) {
    const CellIndex local{static_cast<int>(i % cm.spec_.nx), static_cast<int>(i / cm.spec_.nx)};
    cm.compute_cell(hm, local);
  }
}

void CostMap::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("CostMap::export_csv: cannot open " + path);
  out << "x,y,height_dev,slope,curvature,total\n";
  char buf[160];
  for (int y = 0; y < spec_.ny; ++y) {
    for (int x = 0; x < spec_.nx; ++x) {
      const CellIndex c{x, y};
      const std::size_t i = spec_.flat(c);
      if (!valid_[i]) continue;
      const Vec2 p = spec_.cell_center(c);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.x(), p.y(),
                    layers_.height_dev[i], layers_.slope[i], layers_.curvature[i], total_[i]);
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("CostMap::export_csv: write failed for " + path);
}

}  // namespace locoplan
