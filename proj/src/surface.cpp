#include "locoplan/surface.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace locoplan {

SurfaceEstimate estimate_surface(std::span<const Vec3> points) {
  if (points.size() < 3)
    throw std::invalid_argument("estimate_surface: need at least 3 points");

  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("estimate_surface: eigen-decomposition failed");

  const Vec3 evals = eig.eigenvalues();  // ascending
  const double scale = std::max(evals(2), 1e-300);
  if (evals(1) <= 1e-12 * scale || evals(2) <= 0.0)
    throw std::invalid_argument("estimate_surface: degenerate (collinear) neighborhood");

  SurfaceEstimate est;
  est.eigenvalues = evals;
  est.normal = eig.eigenvectors().col(0);
  if (est.normal.z() < 0.0) est.normal = -est.normal;
  est.normal.normalize();

  const double l0 = std::max(evals(0), 0.0);
  est.curvature = l0 / (l0 + evals(1) + evals(2));
  return est;
}

double slope_angle(const SurfaceEstimate& surface) {
  return std::acos(std::clamp(surface.normal.z(), -1.0, 1.0));
}

}  // namespace locoplan
