#pragma once

#include "locoplan/costmap.hpp"
#include "locoplan/preview.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace locoplan {

struct LatticeSpec {
  double resolution = 0.05;  // [m]
  int headings = 16;

  double heading_step() const;
  int wrap_heading(int bin) const;
  void validate() const;
};

/// Lattice body state: grid-quantized position and discretized yaw.
struct BodyState {
  int x = 0;
  int y = 0;
  int heading = 0;

  bool operator==(const BodyState&) const = default;
};

struct BodyPose {
  Vec2 position = Vec2::Zero();
  double yaw = 0.0;
};

BodyPose to_pose(const BodyState& s, const LatticeSpec& lattice);
BodyState to_lattice(const BodyPose& pose, const LatticeSpec& lattice);

/// Axis-aligned rectangle in the body frame.
struct FootstepRegion {
  Vec2 center = Vec2::Zero();
  Vec2 half_extents{0.10, 0.1175};
};

struct MotionPrimitive {
  int id = 0;
  Vec2 displacement = Vec2::Zero();  // body frame [m]
  int heading_change = 0;            // lattice bins
  double action_cost = 0.0;
  std::array<FootstepRegion, 4> regions;  // per leg, body frame
};

struct BodyCostWeights {
  double terrain = 1.0;
  double action = 0.3;
  double collision = 1.0;
  double orientation = 0.5;
};

struct BodyPlannerParams {
  LatticeSpec lattice;
  NominalStance stance;
  BodyCostWeights weights;
  int best_cells = 5;            // terrain term: n lowest-cost cells per region
  double shin_band_depth = 0.10; // collision band behind each region [m]
  double offmap_cell_cost = 1.0;
};

/// Forward, forward-diagonals, laterals and +-one-bin turns (7 primitives)
/// with per-leg regions centered mid-action around the nominal footholds.
std::vector<MotionPrimitive> default_primitives(const LatticeSpec& lattice,
                                                const NominalStance& stance);

/// Plain-text table: id dx dy dtheta_bins action_cost then per leg (LF RF LH
/// RH) cx cy hx hy. '#' starts a comment line.
std::vector<MotionPrimitive> load_primitives(const std::string& path);
void save_primitives(std::span<const MotionPrimitive> primitives, const std::string& path);

struct BodyCostTerms {
  double terrain = 0.0;  // +inf when a footstep region lies entirely off-map
  double action = 0.0;
  double collision = 0.0;
  double orientation = 0.0;
};

/// Unweighted cost terms for the transition into `to`.
BodyCostTerms body_cost_terms(const BodyState& from, const BodyState& to,
                              const MotionPrimitive& primitive, const CostMap& costmap,
                              const HeightMap& hm, const BodyPlannerParams& params);

/// Linear combination of terrain, action, shin-collision and orientation
/// terms for the transition into `to`; +inf when a footstep region lies
/// entirely off the costmap.
double body_cost(const BodyState& from, const BodyState& to, const MotionPrimitive& primitive,
                 const CostMap& costmap, const HeightMap& hm, const BodyPlannerParams& params);

struct Successor {
  BodyState state;
  int primitive_id = 0;
  double cost = 0.0;
};

/// One successor per applicable primitive; infinite-cost edges are pruned.
std::vector<Successor> expand(const BodyState& s, std::span<const MotionPrimitive> primitives,
                              const CostMap& costmap, const HeightMap& hm,
                              const BodyPlannerParams& params);

/// Admissible cost-to-go: per_step_bound * ceil(distance / step_length).
/// `goal_radius` shrinks the distance for region goals (any state within that
/// radius of the goal counts as reached).
double heuristic(const BodyState& s, const BodyState& goal, double per_step_bound,
                 double step_length, const LatticeSpec& lattice, double goal_radius = 0.0);

/// Lower bound on any edge cost (the weighted minimum action cost) paired
/// with the largest primitive displacement; valid heuristic inputs.
double admissible_step_bound(std::span<const MotionPrimitive> primitives,
                             const BodyCostWeights& weights);
double max_step_length(std::span<const MotionPrimitive> primitives);

struct AraConfig {
  std::vector<double> epsilon_schedule{3.0, 2.0, 1.5, 1.0};
  int max_expansions = 500000;
  double per_step_bound = 0.0;  // 0 degenerates to uniform-cost search
  double step_length = 0.25;
  int goal_position_tolerance = 1;  // cells
  int goal_heading_tolerance = 1;   // bins
};

struct PathNode {
  BodyState state;
  int primitive_id = -1;  // -1 on the start node
};

struct AraResult {
  std::vector<PathNode> path;
  double cost = 0.0;
  double epsilon_achieved = 0.0;
  int expansions = 0;
  // (epsilon bound, path cost) after each completed search, in order.
  std::vector<std::pair<double, double>> improvements;
};

class NoPathError : public std::runtime_error {
 public:
  NoPathError(const std::string& message, double best_epsilon)
      : std::runtime_error(message), best_epsilon_(best_epsilon) {}
  double best_epsilon() const { return best_epsilon_; }

 private:
  double best_epsilon_;
};

/// Anytime repairing A*: weighted searches with a decreasing inflation that
/// reuse inconsistent states. Deterministic tie-breaking by (f, g, insertion
/// order). Throws NoPathError when the goal region is unreachable within the
/// expansion budget.
AraResult ara_star(const BodyState& start, const BodyState& goal,
                   std::span<const MotionPrimitive> primitives, const CostMap& costmap,
                   const HeightMap& hm, const BodyPlannerParams& params, const AraConfig& config);

}  // namespace locoplan
