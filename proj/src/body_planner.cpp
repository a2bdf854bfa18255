#include "locoplan/body_planner.hpp"

#include "locoplan/attitude.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace locoplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double LatticeSpec::heading_step() const { return 2.0 * std::numbers::pi / headings; }

int LatticeSpec::wrap_heading(int bin) const {
  bin %= headings;
  return bin < 0 ? bin + headings : bin;
}

void LatticeSpec::validate() const {
  if (resolution <= 0.0) throw std::invalid_argument("LatticeSpec: resolution must be > 0");
  if (headings < 1) throw std::invalid_argument("LatticeSpec: need at least one heading");
}

BodyPose to_pose(const BodyState& s, const LatticeSpec& lattice) {
  return {Vec2(s.x * lattice.resolution, s.y * lattice.resolution),
          lattice.wrap_heading(s.heading) * lattice.heading_step()};
}

BodyState to_lattice(const BodyPose& pose, const LatticeSpec& lattice) {
  BodyState s;
  s.x = static_cast<int>(std::lround(pose.position.x() / lattice.resolution));
  s.y = static_cast<int>(std::lround(pose.position.y() / lattice.resolution));
  s.heading = lattice.wrap_heading(
      static_cast<int>(std::lround(pose.yaw / lattice.heading_step())));
  return s;
}

std::vector<MotionPrimitive> default_primitives(const LatticeSpec& lattice,
                                                const NominalStance& stance) {
  lattice.validate();
  const double step = 2.0 * lattice.resolution;

  auto with_regions = [&](MotionPrimitive p) {
    for (int leg = 0; leg < 4; ++leg) {
      p.regions[leg].center = stance.offset(static_cast<LegId>(leg)) + 0.5 * p.displacement;
      p.regions[leg].half_extents = {0.10, 0.1175};
    }
    return p;
  };

  std::vector<MotionPrimitive> out;
  out.push_back(with_regions({0, {step, 0.0}, 0, 0.0, {}}));           // forward
  out.push_back(with_regions({1, {step, step / 2.0}, 0, 0.2, {}}));    // forward-left
  out.push_back(with_regions({2, {step, -step / 2.0}, 0, 0.2, {}}));   // forward-right
  out.push_back(with_regions({3, {0.0, step}, 0, 0.5, {}}));           // lateral-left
  out.push_back(with_regions({4, {0.0, -step}, 0, 0.5, {}}));          // lateral-right
  out.push_back(with_regions({5, {0.0, 0.0}, 1, 0.4, {}}));            // turn-left
  out.push_back(with_regions({6, {0.0, 0.0}, -1, 0.4, {}}));           // turn-right
  return out;
}

std::vector<MotionPrimitive> load_primitives(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_primitives: cannot open " + path);
  std::vector<MotionPrimitive> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    MotionPrimitive p;
    row >> p.id >> p.displacement.x() >> p.displacement.y() >> p.heading_change >> p.action_cost;
    for (int leg = 0; leg < 4; ++leg) {
      row >> p.regions[leg].center.x() >> p.regions[leg].center.y() >>
          p.regions[leg].half_extents.x() >> p.regions[leg].half_extents.y();
    }
    if (!row) throw std::runtime_error("load_primitives: malformed row in " + path);
    out.push_back(p);
  }
  if (out.empty()) throw std::runtime_error("load_primitives: no primitives in " + path);
  return out;
}

void save_primitives(std::span<const MotionPrimitive> primitives, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_primitives: cannot open " + path);
  out << "# id dx dy dtheta_bins action_cost then per leg (LF RF LH RH): cx cy hx hy\n";
  char buf[512];
  for (const auto& p : primitives) {
    int n = std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %d %.17g", p.id, p.displacement.x(),
                          p.displacement.y(), p.heading_change, p.action_cost);
    for (const auto& r : p.regions) {
      n += std::snprintf(buf + n, sizeof(buf) - n, " %.17g %.17g %.17g %.17g", r.center.x(),
                         r.center.y(), r.half_extents.x(), r.half_extents.y());
    }
    out << buf << '\n';
  }
}

namespace {

// Visits the costmap cells whose centers fall inside a rotated rectangle.
template <typename Fn>
void for_cells_in_region(const CostMap& cm, const Vec2& center, const Vec2& half, double yaw,
                         Fn&& fn) {
  const GridSpec& spec = cm.spec();
  const double radius = half.norm();
  const int x0 = std::max(
      0, static_cast<int>(std::floor((center.x() - radius - spec.origin.x()) / spec.resolution)));
  const int y0 = std::max(
      0, static_cast<int>(std::floor((center.y() - radius - spec.origin.y()) / spec.resolution)));
  const int x1 = std::min(spec.nx - 1, static_cast<int>(std::ceil(
                                           (center.x() + radius - spec.origin.x()) / spec.resolution)));
  const int y1 = std::min(spec.ny - 1, static_cast<int>(std::ceil(
                                           (center.y() + radius - spec.origin.y()) / spec.resolution)));
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

struct RegionStats {
  std::vector<double> totals;   // per enumerated cell (off/invalid -> offmap cost)
  std::vector<double> heights;  // known heights only
  bool any_on_map = false;
};

RegionStats scan_region(const CostMap& cm, const HeightMap& hm, const Vec2& center,
                        const Vec2& half, double yaw, double offmap_cost) {
  RegionStats stats;
  for_cells_in_region(cm, center, half, yaw, [&](const CellIndex& cell) {
    stats.any_on_map = true;
    stats.totals.push_back(cm.valid(cell) ? cm.total(cell) : offmap_cost);
    const Vec2 xy = cm.spec().cell_center(cell);
    if (const auto z = hm.try_height_at(xy)) stats.heights.push_back(*z);
  });
  return stats;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

BodyCostTerms body_cost_terms(const BodyState& from, const BodyState& to,
                              const MotionPrimitive& primitive, const CostMap& costmap,
                              const HeightMap& hm, const BodyPlannerParams& params) {
  (void)from;
  const BodyPose pose = to_pose(to, params.lattice);
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  auto to_world = [&](const Vec2& body) {
    return Vec2(pose.position.x() + c * body.x() - s * body.y(),
                pose.position.y() + s * body.x() + c * body.y());
  };

  double terrain = 0.0;
  double collision = 0.0;
  for (int leg = 0; leg < 4; ++leg) {
    const FootstepRegion& region = primitive.regions[leg];
    auto stats = scan_region(costmap, hm, to_world(region.center), region.half_extents, pose.yaw,
                             params.offmap_cell_cost);
    if (!stats.any_on_map) return {kInf, primitive.action_cost, 0.0, 0.0};

    // Mean of the n lowest-cost cells in the region.
    const int n = std::min<std::size_t>(params.best_cells, stats.totals.size());
    std::partial_sort(stats.totals.begin(), stats.totals.begin() + n, stats.totals.end());
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += stats.totals[i];
    terrain += mean / n / 4.0;

    // Shin band trails the region along the body axis; cost is the mean
    // height excess above the region's median height.
    const double footstep_plane = median_of(stats.heights);
    const Vec2 band_center =
        region.center - Vec2(region.half_extents.x() + params.shin_band_depth / 2.0, 0.0);
    const Vec2 band_half{params.shin_band_depth / 2.0, region.half_extents.y()};
    double excess = 0.0;
    int band_cells = 0;
    for_cells_in_region(costmap, to_world(band_center), band_half, pose.yaw,
                        [&](const CellIndex& cell) {
                          const Vec2 xy = costmap.spec().cell_center(cell);
                          if (const auto z = hm.try_height_at(xy)) {
                            excess += std::max(0.0, *z - footstep_plane);
                            ++band_cells;
                          }
                        });
    if (band_cells > 0) collision += excess / band_cells / 4.0;
  }

  // Orientation: plane fit through the nominal footholds at the new state.
  double orientation = 0.0;
  std::vector<Vec3> nominal;
  for (int leg = 0; leg < 4; ++leg) {
    const Vec2 xy = to_world(params.stance.offset(static_cast<LegId>(leg)));
    const double z = hm.try_height_at(xy).value_or(0.0);
    nominal.emplace_back(xy.x(), xy.y(), z);
  }
  try {
    const RollPitch rp = fit_support_plane(nominal);
    orientation = std::abs(rp.roll) + std::abs(rp.pitch);
  } catch (const std::exception&) {
    orientation = 0.0;
  }

  return {terrain, primitive.action_cost, collision, orientation};
}

double body_cost(const BodyState& from, const BodyState& to, const MotionPrimitive& primitive,
                 const CostMap& costmap, const HeightMap& hm, const BodyPlannerParams& params) {
  const BodyCostTerms t = body_cost_terms(from, to, primitive, costmap, hm, params);
  if (!std::isfinite(t.terrain)) return kInf;
  const auto& w = params.weights;
  return w.terrain * t.terrain + w.action * t.action + w.collision * t.collision +
         w.orientation * t.orientation;
}

std::vector<Successor> expand(const BodyState& s, std::span<const MotionPrimitive> primitives,
                              const CostMap& costmap, const HeightMap& hm,
                              const BodyPlannerParams& params) {
  const BodyPose pose = to_pose(s, params.lattice);
  std::vector<Successor> out;
  out.reserve(primitives.size());
  for (const auto& p : primitives) {
    const double c = std::cos(pose.yaw), sn = std::sin(pose.yaw);
    const Vec2 world_disp(c * p.displacement.x() - sn * p.displacement.y(),
                          sn * p.displacement.x() + c * p.displacement.y());
    BodyState next;
    next.x = s.x + static_cast<int>(std::lround(world_disp.x() / params.lattice.resolution));
    next.y = s.y + static_cast<int>(std::lround(world_disp.y() / params.lattice.resolution));
    next.heading = params.lattice.wrap_heading(s.heading + p.heading_change);
    if (next == s) continue;  // re-quantized to a null move

    const BodyPose next_pose = to_pose(next, params.lattice);
    if (!costmap.spec().cell_at(next_pose.position)) continue;  // off the costmap
    const double cost = body_cost(s, next, p, costmap, hm, params);
    if (!std::isfinite(cost)) continue;
    out.push_back({next, p.id, cost});
  }
  return out;
}

double heuristic(const BodyState& s, const BodyState& goal, double per_step_bound,
                 double step_length, const LatticeSpec& lattice, double goal_radius) {
  if (step_length <= 0.0) throw std::invalid_argument("heuristic: step_length must be > 0");
  if (per_step_bound < 0.0) throw std::invalid_argument("heuristic: negative per_step_bound");
  const double dist =
      (to_pose(goal, lattice).position - to_pose(s, lattice).position).norm();
  return per_step_bound * std::ceil(std::max(0.0, dist - goal_radius) / step_length - 1e-12);
}

double admissible_step_bound(std::span<const MotionPrimitive> primitives,
                             const BodyCostWeights& weights) {
  double min_action = kInf;
  for (const auto& p : primitives) min_action = std::min(min_action, p.action_cost);
  return std::max(0.0, weights.action * min_action);
}

double max_step_length(std::span<const MotionPrimitive> primitives) {
  double len = 0.0;
  for (const auto& p : primitives) len = std::max(len, p.displacement.norm());
  return len;
}

namespace {

struct StateHash {
  std::size_t operator()(const BodyState& s) const {
    std::uint64_t h = static_cast<std::uint32_t>(s.x);
    h = h * 0x9E3779B97f4A7C15ULL + static_cast<std::uint32_t>(s.y);
    h = h * 0x9E3779B97f4A7C15ULL + static_cast<std::uint32_t>(s.heading);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

struct OpenEntry {
  double f = 0.0;
  double g = 0.0;
  std::uint64_t seq = 0;
  BodyState state;

  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (g != o.g) return g > o.g;
    return seq > o.seq;
  }
};

struct NodeRecord {
  double g = kInf;
  BodyState parent;
  int primitive_id = -1;
  bool has_parent = false;
};

}  // namespace

AraResult ara_star(const BodyState& start, const BodyState& goal,
                   std::span<const MotionPrimitive> primitives, const CostMap& costmap,
                   const HeightMap& hm, const BodyPlannerParams& params, const AraConfig& config) {
  params.lattice.validate();
  if (config.epsilon_schedule.empty() || config.epsilon_schedule.front() < 1.0)
    throw std::invalid_argument("ara_star: epsilon schedule must start at >= 1");

  // Any state within the position tolerance box is a goal; deduct its
  // circumradius so the heuristic stays admissible for the region.
  const double goal_radius =
      config.goal_position_tolerance * params.lattice.resolution * std::numbers::sqrt2;
  auto h = [&](const BodyState& s) {
    return heuristic(s, goal, config.per_step_bound, config.step_length, params.lattice,
                     goal_radius);
  };
  const int heading_span = params.lattice.headings;
  auto in_goal_region = [&](const BodyState& s) {
    int dh = std::abs(s.heading - goal.heading) % heading_span;
    dh = std::min(dh, heading_span - dh);
    return std::abs(s.x - goal.x) <= config.goal_position_tolerance &&
           std::abs(s.y - goal.y) <= config.goal_position_tolerance &&
           dh <= config.goal_heading_tolerance;
  };

  std::unordered_map<BodyState, NodeRecord, StateHash> nodes;
  nodes[start].g = 0.0;

  using Heap = std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<OpenEntry>>;
  Heap open;
  std::uint64_t seq = 0;
  double epsilon = config.epsilon_schedule.front();
  open.push({epsilon * h(start), 0.0, seq++, start});
  std::unordered_set<std::size_t> incons_keys;
  std::vector<BodyState> incons;

  double best_goal_g = kInf;
  BodyState best_goal = start;
  bool goal_found = in_goal_region(start);
  if (goal_found) {
    best_goal_g = 0.0;
    best_goal = start;
  }

  AraResult result;
  result.expansions = 0;

  auto reconstruct = [&](const BodyState& s) {
    std::vector<PathNode> path;
    BodyState cur = s;
    while (true) {
      const auto& rec = nodes.at(cur);
      path.push_back({cur, rec.primitive_id});
      if (!rec.has_parent) break;
      cur = rec.parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  std::size_t schedule_pos = 0;
  bool budget_exhausted = false;
  while (schedule_pos < config.epsilon_schedule.size()) {
    epsilon = config.epsilon_schedule[schedule_pos];
    if (epsilon < 1.0) epsilon = 1.0;

    // Move inconsistent states back into the open list under the new epsilon.
    std::vector<OpenEntry> rebuilt;
    while (!open.empty()) {
      OpenEntry e = open.top();
      open.pop();
      const auto it = nodes.find(e.state);
      if (it == nodes.end() || it->second.g != e.g) continue;  // stale
      e.f = e.g + epsilon * h(e.state);
      rebuilt.push_back(e);
    }
    for (const auto& s : incons) {
      const auto it = nodes.find(s);
      if (it == nodes.end()) continue;
      rebuilt.push_back({it->second.g + epsilon * h(s), it->second.g, seq++, s});
    }
    incons.clear();
    incons_keys.clear();
    open = Heap(std::greater<OpenEntry>(), std::move(rebuilt));

    std::unordered_set<std::size_t> closed;
    while (!open.empty()) {
      const OpenEntry top = open.top();
      if (best_goal_g <= top.f) break;  // current search cannot improve
      open.pop();
      const auto it = nodes.find(top.state);
      if (it == nodes.end() || it->second.g != top.g) continue;  // stale entry
      const std::size_t key = StateHash{}(top.state);
      if (closed.count(key)) continue;
      closed.insert(key);

      if (++result.expansions > config.max_expansions) {
        budget_exhausted = true;
        break;
      }

      for (const auto& succ : expand(top.state, primitives, costmap, hm, params)) {
        const double candidate = top.g + succ.cost;
        auto& rec = nodes[succ.state];
        if (candidate < rec.g) {
          rec.g = candidate;
          rec.parent = top.state;
          rec.primitive_id = succ.primitive_id;
          rec.has_parent = true;
          if (in_goal_region(succ.state) && candidate < best_goal_g) {
            best_goal_g = candidate;
            best_goal = succ.state;
            goal_found = true;
          }
          const std::size_t skey = StateHash{}(succ.state);
          if (closed.count(skey)) {
            if (!incons_keys.count(skey)) {
              incons_keys.insert(skey);
              incons.push_back(succ.state);
            }
          } else {
            open.push({candidate + epsilon * h(succ.state), candidate, seq++, succ.state});
          }
        }
      }
    }

    if (goal_found) {
      result.cost = best_goal_g;
      result.epsilon_achieved = epsilon;
      result.improvements.emplace_back(epsilon, best_goal_g);
      result.path = reconstruct(best_goal);
    }
    if (budget_exhausted) break;
    ++schedule_pos;
  }

  if (!goal_found) {
    throw NoPathError(budget_exhausted ? "ara_star: expansion budget exhausted before a path"
                                       : "ara_star: goal unreachable",
                      budget_exhausted ? epsilon : kInf);
  }
  return result;
}

}  // namespace locoplan
