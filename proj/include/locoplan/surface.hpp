#pragma once

#include "locoplan/grid.hpp"

#include <span>

namespace locoplan {

/// Local surface fit from a PCA of a point neighborhood.
struct SurfaceEstimate {
  Vec3 normal = Vec3::UnitZ();  // unit length, z-component >= 0
  double curvature = 0.0;       // lambda0 / (lambda0+lambda1+lambda2), in [0, 1/3]
  Vec3 eigenvalues = Vec3::Zero();  // ascending, all >= 0 up to round-off
};

/// Eigen-decomposition of the covariance of the centered points. The normal is
/// the eigenvector of the smallest eigenvalue, sign-flipped so its z-component
/// is non-negative. Throws on fewer than 3 points or a rank-deficient
/// (collinear) neighborhood.
SurfaceEstimate estimate_surface(std::span<const Vec3> points);

/// Slope angle [rad] between the estimated normal and the vertical.
double slope_angle(const SurfaceEstimate& surface);

}  // namespace locoplan
