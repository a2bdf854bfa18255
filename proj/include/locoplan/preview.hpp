#pragma once

#include "locoplan/support.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace locoplan {

enum class LegId : int { LF = 0, RF = 1, LH = 2, RH = 3 };

constexpr std::array<const char*, 4> kLegNames{"LF", "RF", "LH", "RH"};

inline LegId diagonal_opposite(LegId leg) {
  switch (leg) {
    case LegId::LF: return LegId::RH;
    case LegId::RF: return LegId::LH;
    case LegId::LH: return LegId::RF;
    case LegId::RH: return LegId::LF;
  }
  return LegId::LF;
}

enum class PhaseKind { Stance, Swing };

/// One preview phase: duration, linear COP displacement, and (swing phases)
/// the landing offset of the swing foot relative to its nominal stance point.
struct PreviewPhase {
  PhaseKind kind = PhaseKind::Stance;
  double duration = 0.0;
  Vec2 cop_shift = Vec2::Zero();
  Vec2 foot_shift = Vec2::Zero();  // swing only
  LegId swing_leg = LegId::LF;     // swing only
};

struct ControlSequence {
  std::vector<PreviewPhase> phases;
};

struct CartTableParams {
  double height = 0.58;   // [m]
  double gravity = 9.81;  // [m/s^2]

  double omega() const;
  void validate() const;
};

/// Default foothold geometry: axis-aligned offsets of each leg from the body
/// center in the horizontal frame.
struct NominalStance {
  double half_length = 0.375;  // hip-to-hip 0.75 m
  double half_width = 0.25;    // lateral 0.5 m

  Vec2 offset(LegId leg) const {
    const bool front = leg == LegId::LF || leg == LegId::RF;
    const bool left = leg == LegId::LF || leg == LegId::LH;
    return {front ? half_length : -half_length, left ? half_width : -half_width};
  }
};

struct SupportRegion {
  std::array<Vec2, 4> feet{};      // per-leg stance positions
  std::array<bool, 4> active{true, true, true, true};
  std::vector<SupportLine> lines;  // shrunk polygon of the active feet
  double margin = 0.0;

  std::vector<Vec2> active_feet() const;
  void rebuild_lines();
};

struct PreviewState {
  Vec2 com = Vec2::Zero();
  Vec2 com_vel = Vec2::Zero();
  Vec2 cop = Vec2::Zero();
  SupportRegion support;
  double time = 0.0;
};

/// COP along the linear displacement law of a phase; t must lie in [0, T].
Vec2 cop_at(const PreviewPhase& phase, const Vec2& start_cop, double t);

struct ComSample {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Closed-form cart-table trajectory at time t of a phase with a linearly
/// displaced COP. Requires phase.duration > 0 and t in [0, T].
ComSample com_trajectory(const Vec2& com0, const Vec2& vel0, const Vec2& cop0,
                         const PreviewPhase& phase, const CartTableParams& params, double t);
ComSample com_trajectory(const PreviewState& s0, const PreviewPhase& phase,
                         const CartTableParams& params, double t);

/// Applies the phases in order, skipping zero-duration ones. Swing phases move
/// the swing foot to (com at phase start) + nominal offset + foot_shift and
/// exclude it from the phase's support. Returns the initial state of every
/// executed phase plus the final state.
std::vector<PreviewState> rollout(const PreviewState& s0, const ControlSequence& controls,
                                  double margin, const CartTableParams& params,
                                  const NominalStance& stance);

/// Mean stance-foot height plus the desired clearance.
double trunk_height_reference(std::span<const double> stance_heights, double clearance);

/// Initial state helper: feet at the nominal stance around `com`, COP at the
/// CoM projection, all four feet active.
PreviewState make_initial_state(const Vec2& com, const Vec2& com_vel, const NominalStance& stance,
                                double margin);

/// Samples the rollout at `dt` and writes CSV rows
/// (t, x, y, xd, yd, px, py, phase_id).
void export_plan_csv(const std::vector<PreviewState>& states, const ControlSequence& controls,
                     const CartTableParams& params, double dt, const std::string& path);

}  // namespace locoplan
