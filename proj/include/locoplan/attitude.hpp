#pragma once

#include "locoplan/grid.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace locoplan {

/// Flywheel approximation of the trunk: a fixed centroidal inertia tensor
/// relating angular accelerations to moments about the CoM.
struct InertiaModel {
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();
  double mass = 85.0;
  double gravity = 9.81;

  void validate() const;
};

/// Horizontal CMP-COP offset produced by an angular acceleration of the trunk.
Vec2 cmp_shift(const InertiaModel& im, const Vec3& angular_acc);

/// Largest per-axis angular-acceleration magnitudes (roll, pitch) such that a
/// pure single-axis acceleration keeps the CMP shift within `margin`.
Vec2 max_angular_acceleration(const InertiaModel& im, double margin);

struct RollPitch {
  double roll = 0.0;
  double pitch = 0.0;
};

/// Least-squares plane through the footholds; roll/pitch align the trunk
/// z-axis with the plane normal (positive pitch = front raised, positive roll
/// = left side raised). Throws on fewer than 3 or collinear footholds.
RollPitch fit_support_plane(std::span<const Vec3> footholds);

struct AttitudeState {
  double roll = 0.0;
  double pitch = 0.0;
  double roll_rate = 0.0;
  double pitch_rate = 0.0;
};

/// Piecewise-cubic roll/pitch trajectory. Segment-boundary rates are zero, so
/// the spline is C1 across phases and at both plan ends.
struct AttitudeSpline {
  struct Segment {
    double duration = 0.0;
    Eigen::Vector4d roll_coeffs = Eigen::Vector4d::Zero();   // c0 + c1 t + c2 t^2 + c3 t^3
    Eigen::Vector4d pitch_coeffs = Eigen::Vector4d::Zero();
  };

  struct Sample {
    double roll = 0.0, pitch = 0.0;
    double roll_rate = 0.0, pitch_rate = 0.0;
    double roll_acc = 0.0, pitch_acc = 0.0;
  };

  std::vector<Segment> segments;
  bool complete = true;

  double total_duration() const;
  RollPitch terminal() const;

  /// Evaluates at plan time t, clamped to [0, total_duration].
  Sample sample(double t) const;
};

/// Greedy multi-phase adaptation toward a single target: each phase absorbs at
/// most bound*T^2/6 of the remaining displacement per axis (the peak
/// acceleration of a rest-to-rest cubic). A plan that runs out of phases is
/// returned flagged incomplete.
AttitudeSpline plan_attitude(const AttitudeState& current, const RollPitch& target,
                             const Vec2& accel_bounds, std::span<const double> phase_durations);

/// Same capacity rule, but tracking a per-phase target sequence (one entry per
/// duration).
AttitudeSpline plan_attitude_tracking(const AttitudeState& current,
                                      std::span<const RollPitch> targets, const Vec2& accel_bounds,
                                      std::span<const double> phase_durations);

}  // namespace locoplan
