#pragma once

#include "locoplan/grid.hpp"
#include "locoplan/heightmap.hpp"

#include <Eigen/Core>

#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace locoplan {

/// Piecewise log-barrier cost for monotone features (height deviation, slope).
/// Zero up to flat_threshold, saturates at max_cost from barrier upward.
struct FeatureParams {
  double flat_threshold = 0.01;
  double barrier = 0.06;
  double max_cost = 1.0;
};

/// Piecewise cost for the signed curvature feature. Zero inside the mild band,
/// max_cost at both extremes, log-barrier decay between crack and the band.
struct CurvatureParams {
  double crack = -6.0;
  double mild_low = 6.0;
  double mild_high = 9.0;
  double max_value = 9.0;
  double max_cost = 1.0;
};

double feature_cost(double f, const FeatureParams& p);
double curvature_cost(double c, const CurvatureParams& p);

struct CostmapParams {
  Eigen::Vector3d weights{1.0, 1.0, 1.0};  // height_dev, slope, curvature
  FeatureParams height_dev{0.01, 0.06, 1.0};
  FeatureParams slope{std::numbers::pi / 180.0, 70.0 * std::numbers::pi / 180.0, 1.0};
  CurvatureParams curvature{};
  double height_dev_window = 0.06;  // [m]
  double slope_window = 0.06;       // [m]
  // Affine map from signed PCA curvature to the units of CurvatureParams
  // (calibration; negative values = locally convex along the normal). The
  // offset centers planar surfaces in the zero-cost mild band.
  double curvature_scale = 27.0;
  double curvature_offset = 7.5;

  void validate() const;
  double max_window() const { return std::max(height_dev_window, slope_window); }
};

/// Per-cell foothold risk over a sub-rectangle of a heightmap. Cells without a
/// usable surface fit (unknown or fewer than 3 valid neighbors) carry total
/// cost 1 with NaN feature layers; cells outside the source heightmap's known
/// region are invalid. All queries are const and safe to run concurrently.
class CostMap {
 public:
  struct Layers {
    std::vector<double> height_dev;       // feature values
    std::vector<double> slope;            // [rad]
    std::vector<double> curvature;        // mapped units
    std::vector<double> height_dev_cost;  // raw per-feature costs
    std::vector<double> slope_cost;
    std::vector<double> curvature_cost;
  };

  const GridSpec& spec() const { return spec_; }
  const Eigen::Vector3d& weights() const { return params_.weights; }
  const CostmapParams& params() const { return params_; }

  bool valid(const CellIndex& cell) const;
  std::size_t valid_count() const;

  /// Normalized total cost in [0,1] of a valid cell; throws otherwise.
  double total(const CellIndex& cell) const;

  /// Total at a world position; nullopt off-map or on an invalid cell.
  std::optional<double> try_total_at(const Vec2& xy) const;

  /// Total at a world position, `fallback` off-map or on invalid cells
  /// (planners treat unknown terrain as maximally risky).
  double total_or(const Vec2& xy, double fallback = 1.0) const;

  const Layers& layers() const { return layers_; }
  const CellIndex& heightmap_offset() const { return hm_offset_; }

  /// CSV rows: x, y, height_dev, slope, curvature, total (valid cells only).
  void export_csv(const std::string& path) const;

  friend CostMap build_costmap(const HeightMap&, const CostmapParams&, const Rect&);
  friend void update_costmap(CostMap&, const HeightMap&, std::span<const CellIndex>);

 private:
  void compute_cell(const HeightMap& hm, const CellIndex& local);

  GridSpec spec_;
  CellIndex hm_offset_;  // costmap (0,0) in heightmap indices
  CostmapParams params_;
  Layers layers_;
  std::vector<double> total_;
  std::vector<std::uint8_t> valid_;
};

/// Evaluates the weighted feature costs over every known cell of `hm` inside
/// `aoi`. Throws if the area of interest misses the grid or no weight is
/// positive; an all-unknown area yields a costmap with zero valid cells.
CostMap build_costmap(const HeightMap& hm, const CostmapParams& params, const Rect& aoi);

/// Recomputes exactly the cells whose feature windows reach any edited
/// heightmap cell; equals a full rebuild restricted to those windows.
void update_costmap(CostMap& cm, const HeightMap& hm, std::span<const CellIndex> edited);

}  // namespace locoplan
