#pragma once

#include "locoplan/body_planner.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locoplan {

struct FootstepCostWeights {
  double terrain = 1.0;
  double support = 0.2;
  double collision = 1.0;
  double orientation = 0.5;
  double inradius_epsilon = 0.01;  // [m]
  double shin_band_width = 0.04;   // [m], band behind the candidate
};

struct FootholdStep {
  LegId leg = LegId::LF;
  Vec3 position = Vec3::Zero();
  BodyState body;  // body state the action leads to
  int action_id = 0;
};

struct FootholdPlan {
  std::vector<FootholdStep> steps;

  /// CSV rows: step, leg, x, y, z, action_id.
  void export_csv(const std::string& path) const;
};

/// Stance snapshot while placing one leg. The support triangle pairs the
/// candidate with the two feet that stay in stance once `next_swing` lifts;
/// next_swing defaults to the diagonal opposite of the stepping leg.
struct StanceContext {
  std::array<Vec3, 4> feet{};
  LegId stepping = LegId::LF;
  std::optional<LegId> next_swing;
  double body_yaw = 0.0;

  LegId effective_next_swing() const {
    return next_swing ? *next_swing : diagonal_opposite(stepping);
  }
};

/// Weighted terrain + support-triangle + shin-collision + orientation cost of
/// placing the stepping leg on the candidate cell; +inf off the costmap.
double footstep_cost(const Vec2& candidate_xy, double candidate_z, const StanceContext& stance,
                     const CostMap& costmap, const HeightMap& hm,
                     const FootstepCostWeights& weights, const BodyPlannerParams& params);

/// Argmin of footstep_cost over every costmap cell inside the action's
/// region for the leg (transformed to the world by the body pose). Ties break
/// by distance to the region center, then row-major cell order. Throws when
/// the region has no usable candidate.
Vec3 select_foothold(const MotionPrimitive& action, LegId leg, const BodyState& body,
                     const StanceContext& stance, const CostMap& costmap, const HeightMap& hm,
                     const FootstepCostWeights& weights, const BodyPlannerParams& params);

/// Walks the body path and selects one foothold per action, legs assigned in
/// gait order, updating the stance context incrementally.
FootholdPlan plan_foothold_sequence(std::span<const PathNode> body_path,
                                    std::span<const MotionPrimitive> primitives,
                                    const CostMap& costmap, const HeightMap& hm,
                                    const FootstepCostWeights& weights,
                                    const BodyPlannerParams& params,
                                    std::span<const LegId> gait_order);

/// Default gait order LF, RH, RF, LH.
std::span<const LegId> default_gait_order();

}  // namespace locoplan
