#include "locoplan/foothold.hpp"

#include "locoplan/attitude.hpp"
#include "locoplan/support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace locoplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<LegId, 4> kDefaultGait{LegId::LF, LegId::RH, LegId::RF, LegId::LH};

// Visits costmap cells whose centers fall inside a yaw-rotated rectangle.
template <typename Fn>
void for_cells_in_rect(const GridSpec& spec, const Vec2& center, const Vec2& half, double yaw,
                       Fn&& fn) {
  const double radius = half.norm();
  const int x0 = std::max(
      0, static_cast<int>(std::floor((center.x() - radius - spec.origin.x()) / spec.resolution)));
  const int y0 = std::max(
      0, static_cast<int>(std::floor((center.y() - radius - spec.origin.y()) / spec.resolution)));
  const int x1 = std::min(
      spec.nx - 1,
      static_cast<int>(std::ceil((center.x() + radius - spec.origin.x()) / spec.resolution)));
  const int y1 = std::min(
      spec.ny - 1,
      static_cast<int>(std::ceil((center.y() + radius - spec.origin.y()) / spec.resolution)));
  const double c = std::cos(yaw), s = std::sin(yaw);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec2 d = spec.cell_center({x, y}) - center;
      const double bx = c * d.x() + s * d.y();
      const double by = -s * d.x() + c * d.y();
      if (std::abs(bx) <= half.x() + 1e-9 && std::abs(by) <= half.y() + 1e-9)
        fn(CellIndex{x, y});
    }
  }
}
}  // namespace

std::span<const LegId> default_gait_order() { return kDefaultGait; }

void FootholdPlan::export_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("FootholdPlan::export_csv: cannot open " + path);
  out << "step,leg,x,y,z,action_id\n";
  char buf[160];
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g,%.17g,%.17g,%d\n", i,
                  kLegNames[static_cast<int>(s.leg)], s.position.x(), s.position.y(),
                  s.position.z(), s.action_id);
    out << buf;
  }
}

double footstep_cost(const Vec2& candidate_xy, double candidate_z, const StanceContext& stance,
                     const CostMap& costmap, const HeightMap& hm,
                     const FootstepCostWeights& weights, const BodyPlannerParams& params) {
  const auto total = costmap.try_total_at(candidate_xy);
  if (!total) return kInf;

  // Support triangle: candidate plus the two feet still in stance when the
  // next swing leg lifts.
  const LegId lifting = stance.effective_next_swing();
  std::array<Vec2, 2> mates;
  int m = 0;
  for (int leg = 0; leg < 4 && m < 2; ++leg) {
    if (leg == static_cast<int>(stance.stepping) || leg == static_cast<int>(lifting)) continue;
    mates[m++] = stance.feet[leg].head<2>();
  }
  const double radius = triangle_inradius(candidate_xy, mates[0], mates[1]);
  const double support = 1.0 / (radius + weights.inradius_epsilon);

  // Shin collision: mean height excess above the candidate inside the band
  // trailing it along the body axis.
  const Vec2 band_center = candidate_xy - Vec2(std::cos(stance.body_yaw), std::sin(stance.body_yaw)) *
                                               (params.shin_band_depth / 2.0);
  const Vec2 band_half{params.shin_band_depth / 2.0, weights.shin_band_width / 2.0};
  double excess = 0.0;
  int band_cells = 0;
  for_cells_in_rect(hm.spec(), band_center, band_half, stance.body_yaw, [&](const CellIndex& cell) {
    if (!hm.known(cell)) return;
    excess += std::max(0.0, hm.height(cell) - candidate_z);
    ++band_cells;
  });
  const double collision = band_cells > 0 ? excess / band_cells : 0.0;

  // Orientation of the plane formed by the stance feet and the candidate.
  double orientation = 0.0;
  std::vector<Vec3> plane_points{{candidate_xy.x(), candidate_xy.y(), candidate_z}};
  for (int leg = 0; leg < 4; ++leg) {
    if (leg == static_cast<int>(stance.stepping)) continue;
    plane_points.push_back(stance.feet[leg]);
  }
  try {
    const RollPitch rp = fit_support_plane(plane_points);
    orientation = std::abs(rp.roll) + std::abs(rp.pitch);
  } catch (const std::exception&) {
    orientation = 0.0;
  }

  return weights.terrain * *total + weights.support * support + weights.collision * collision +
         weights.orientation * orientation;
}

Vec3 select_foothold(const MotionPrimitive& action, LegId leg, const BodyState& body,
                     const StanceContext& stance, const CostMap& costmap, const HeightMap& hm,
                     const FootstepCostWeights& weights, const BodyPlannerParams& params) {
  const BodyPose pose = to_pose(body, params.lattice);
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const FootstepRegion& region = action.regions[static_cast<int>(leg)];
  const Vec2 region_center(pose.position.x() + c * region.center.x() - s * region.center.y(),
                           pose.position.y() + s * region.center.x() + c * region.center.y());

  struct Best {
    double cost = kInf;
    double center_dist2 = kInf;
    std::size_t flat = 0;
    Vec3 position = Vec3::Zero();
    bool found = false;
  } best;

  for_cells_in_rect(costmap.spec(), region_center, region.half_extents, pose.yaw,
                    [&](const CellIndex& cell) {
                      const Vec2 xy = costmap.spec().cell_center(cell);
                      const auto z = hm.try_height_at(xy);
                      if (!z) return;
                      const double cost =
                          footstep_cost(xy, *z, stance, costmap, hm, weights, params);
                      if (!std::isfinite(cost)) return;
                      const double d2 = (xy - region_center).squaredNorm();
                      const std::size_t flat = costmap.spec().flat(cell);
                      const bool better =
                          cost < best.cost ||
                          (cost == best.cost && (d2 < best.center_dist2 ||
                                                 (d2 == best.center_dist2 && flat < best.flat)));
                      if (better) {
                        best = {cost, d2, flat, Vec3(xy.x(), xy.y(), *z), true};
                      }
                    });
  if (!best.found)
    throw std::runtime_error("select_foothold: footstep region has no usable candidate");
  return best.position;
}

FootholdPlan plan_foothold_sequence(std::span<const PathNode> body_path,
                                    std::span<const MotionPrimitive> primitives,
                                    const CostMap& costmap, const HeightMap& hm,
                                    const FootstepCostWeights& weights,
                                    const BodyPlannerParams& params,
                                    std::span<const LegId> gait_order) {
  FootholdPlan plan;
  if (body_path.size() < 2) return plan;
  if (gait_order.empty()) throw std::invalid_argument("plan_foothold_sequence: empty gait order");

  auto primitive_by_id = [&](int id) -> const MotionPrimitive& {
    for (const auto& p : primitives)
      if (p.id == id) return p;
    throw std::invalid_argument("plan_foothold_sequence: unknown primitive id");
  };

  StanceContext stance;
  const BodyPose start_pose = to_pose(body_path.front().state, params.lattice);
  const double c = std::cos(start_pose.yaw), s = std::sin(start_pose.yaw);
  for (int leg = 0; leg < 4; ++leg) {
    const Vec2 off = params.stance.offset(static_cast<LegId>(leg));
    const Vec2 xy(start_pose.position.x() + c * off.x() - s * off.y(),
                  start_pose.position.y() + s * off.x() + c * off.y());
    stance.feet[leg] = Vec3(xy.x(), xy.y(), hm.try_height_at(xy).value_or(0.0));
  }

  for (std::size_t k = 0; k + 1 < body_path.size(); ++k) {
    const PathNode& next = body_path[k + 1];
    const MotionPrimitive& action = primitive_by_id(next.primitive_id);
    const LegId leg = gait_order[k % gait_order.size()];
    stance.stepping = leg;
    stance.next_swing = gait_order[(k + 1) % gait_order.size()];
    stance.body_yaw = to_pose(next.state, params.lattice).yaw;

    const Vec3 foothold =
        select_foothold(action, leg, next.state, stance, costmap, hm, weights, params);
    stance.feet[static_cast<int>(leg)] = foothold;
    plan.steps.push_back({leg, foothold, next.state, action.id});
  }
  return plan;
}

}  // namespace locoplan
