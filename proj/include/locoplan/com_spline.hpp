#pragma once

#include "locoplan/foothold.hpp"
#include "locoplan/qp.hpp"
#include "locoplan/support.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace locoplan {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ComPhaseKind { Swing, FourLegSupport };

struct ComPhase {
  ComPhaseKind kind = ComPhaseKind::FourLegSupport;
  LegId swing_leg = LegId::LF;  // swing phases only
  double duration = 0.0;
  std::vector<Vec3> support_feet;        // 3 (swing) or 4 feet
  std::vector<SupportLine> support_lines;  // shrunk by the plan margin
};

struct PhasePlan {
  std::vector<ComPhase> phases;
  double margin = 0.1;          // support shrink r [m]
  double swing_duration = 0.6;  // [s]
  double sample_dt = 0.02;      // COP constraint sampling [s]

  double four_leg_duration() const { return margin * swing_duration; }
  double total_duration() const;
};

/// One swing phase per foothold step; a four-leg-support phase (duration
/// margin * t_swing) is inserted before each diagonally-opposite swing
/// transition. Zero-duration four-leg phases are eliminated. Throws when the
/// margin empties a support triangle.
PhasePlan build_phase_plan(const FootholdPlan& plan, const std::array<Vec3, 4>& initial_stance,
                           double swing_duration, double margin, double sample_dt = 0.02);

struct ComBoundary {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
};

struct SplineWeights {
  double forward = 1.0;
  double lateral = 1.5;  // sideways accelerations cost more
};

/// Quintic CoM spline, one polynomial per phase and axis. Coefficients are
/// ordered highest power first: x(t) = a t^5 + b t^4 + ... + f.
struct QuinticSpline {
  struct Phase {
    double duration = 0.0;
    Eigen::Matrix<double, 6, 1> x_coeffs = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 1> y_coeffs = Eigen::Matrix<double, 6, 1>::Zero();
  };

  struct Sample {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    Vec2 acceleration = Vec2::Zero();
  };

  std::vector<Phase> phases;

  double total_duration() const;
  Sample sample(double t) const;  // global plan time, clamped

  /// Horizontal COP under the cart-table model with constant height.
  Vec2 cop(double t, double height, double gravity = 9.81) const;

  /// Direct Gram-form evaluation of the weighted squared-acceleration
  /// integral.
  double objective(const SplineWeights& weights) const;

  /// CSV rows: t, x, y, xd, yd, xdd, ydd, px, py, phase_id.
  void export_csv(const std::string& path, double height, double dt,
                  double gravity = 9.81) const;
};

/// Gram matrix of the quintic acceleration basis over [0, T]; entry (2,2),
/// the (t^3, t^3) pair, is 12 T^3.
Eigen::Matrix<double, 6, 6> acceleration_gram(double duration);

/// Assembles the acceleration-minimizing QP: junction/initial equalities, COP
/// line inequalities at every owned sample (phase-local t in [0, T), plus the
/// terminal instant of the last phase).
qp::QpProblem assemble_qp(const PhasePlan& plan, const ComBoundary& start, double height,
                          const SplineWeights& weights, double gravity = 9.81);

/// Solves the assembled QP and validates junction continuity plus COP slack
/// at every sample. Throws PlannerError when infeasible (swing durations too
/// short or margin too large).
QuinticSpline generate_com_trajectory(const PhasePlan& plan, const ComBoundary& start,
                                      double height, const SplineWeights& weights,
                                      double gravity = 9.81, double qp_tolerance = 1e-9);

/// Parametric swing arc with vertical clearance lift + max(0, climb); an
/// optional outward lateral offset applies on climbing steps. Endpoints are
/// exact.
std::vector<Vec3> swing_profile(const Vec3& start, const Vec3& goal, double lift,
                                int samples = 21, double outward = 0.0);

}  // namespace locoplan
