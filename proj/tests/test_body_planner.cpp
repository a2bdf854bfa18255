#include <doctest.h>

#include "locoplan/body_planner.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>

using namespace locoplan;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scaled-down planner setup whose footstep regions stay on small test maps.
BodyPlannerParams small_params() {
  BodyPlannerParams p;
  p.lattice.resolution = 0.05;
  p.lattice.headings = 16;
  p.stance.half_length = 0.10;
  p.stance.half_width = 0.08;
  p.best_cells = 3;
  p.shin_band_depth = 0.06;
  return p;
}

std::vector<MotionPrimitive> small_primitives(const BodyPlannerParams& params,
                                              double forward_cost = 0.0) {
  auto prims = default_primitives(params.lattice, params.stance);
  for (auto& p : prims) {
    p.displacement *= 0.5;                        // one-cell moves
    if (p.id == 0) p.action_cost = forward_cost;  // forward
    for (auto& r : p.regions) {
      r.center = 0.5 * r.center;
      r.half_extents = {0.05, 0.05};
    }
  }
  // Re-center regions on the scaled stance.
  for (auto& p : prims)
    for (int leg = 0; leg < 4; ++leg)
      p.regions[leg].center =
          params.stance.offset(static_cast<LegId>(leg)) + 0.5 * p.displacement;
  return prims;
}

HeightMap flat_hm(int nx, int ny, double z = 0.0) {
  GridSpec spec;
  spec.resolution = 0.02;
  spec.nx = nx;
  spec.ny = ny;
  spec.origin = {-nx * 0.01, -ny * 0.01};  // centered on the origin
  HeightMap hm(spec);
  hm.fill(z);
  return hm;
}

CostMap flat_cm(const HeightMap& hm) {
  return build_costmap(hm, {}, Rect{hm.spec().min_corner(), hm.spec().max_corner()});
}

// Independent uniform-cost search over the same lattice graph.
struct UcsOracle {
  std::map<std::tuple<int, int, int>, double> dist;

  double run(const BodyState& start, const BodyState& goal,
             std::span<const MotionPrimitive> prims, const CostMap& cm, const HeightMap& hm,
             const BodyPlannerParams& params, const AraConfig& cfg) {
    auto key = [](const BodyState& s) { return std::make_tuple(s.x, s.y, s.heading); };
    auto in_goal = [&](const BodyState& s) {
      int dh = std::abs(s.heading - goal.heading) % params.lattice.headings;
      dh = std::min(dh, params.lattice.headings - dh);
      return std::abs(s.x - goal.x) <= cfg.goal_position_tolerance &&
             std::abs(s.y - goal.y) <= cfg.goal_position_tolerance &&
             dh <= cfg.goal_heading_tolerance;
    };
    using Entry = std::pair<double, std::tuple<int, int, int>>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    std::map<std::tuple<int, int, int>, BodyState> states;
    dist.clear();
    dist[key(start)] = 0.0;
    states[key(start)] = start;
    pq.push({0.0, key(start)});
    double best = kInf;
    while (!pq.empty()) {
      const auto [g, k] = pq.top();
      pq.pop();
      if (g != dist.at(k)) continue;
      const BodyState s = states.at(k);
      if (in_goal(s)) best = std::min(best, g);
      if (g >= best) continue;
      for (const auto& succ : expand(s, prims, cm, hm, params)) {
        const double cand = g + succ.cost;
        const auto sk = key(succ.state);
        auto it = dist.find(sk);
        if (it == dist.end() || cand < it->second) {
          dist[sk] = cand;
          states[sk] = succ.state;
          pq.push({cand, sk});
        }
      }
    }
    return best;
  }
};

HeightMap random_hm(test_util::Rng& rng, int nx, int ny) {
  auto hm = flat_hm(nx, ny);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      hm.set_height({x, y}, rng.uniform() < 0.8 ? 0.0 : rng.uniform(0.0, 0.12));
  return hm;
}

}  // namespace

TEST_CASE("lattice pose round trip") {
  LatticeSpec lattice;
  const BodyState s{7, -3, 5};
  const BodyState back = to_lattice(to_pose(s, lattice), lattice);
  CHECK(back == s);
  CHECK(to_pose(s, lattice).yaw == doctest::Approx(5 * 2.0 * M_PI / 16.0));
}

TEST_CASE("expand respects frame rotation and pruning") {
  const auto params = small_params();
  const auto hm = flat_hm(60, 60);
  const auto cm = flat_cm(hm);

  // Forward primitive at heading pi/2 moves along +y.
  auto prims = small_primitives(params);
  prims.resize(1);  // forward only
  const BodyState s{0, 0, 4};
  const auto succ = expand(s, prims, cm, hm, params);
  REQUIRE(succ.size() == 1);
  CHECK(succ[0].state.x == 0);
  CHECK(succ[0].state.y == 1);
  CHECK(succ[0].state.heading == 4);

  // Three applicable primitives give at most three successors.
  auto three = small_primitives(params);
  three.resize(3);
  CHECK(expand({0, 0, 0}, three, cm, hm, params).size() <= 3);

  // Successors whose regions leave the map are pruned.
  const BodyState edge{28, 0, 0};
  CHECK(expand(edge, prims, cm, hm, params).empty());
}

TEST_CASE("body cost on flat terrain") {
  const auto params = small_params();
  const auto hm = flat_hm(60, 60);
  const auto cm = flat_cm(hm);
  const auto prims = small_primitives(params);

  // Zero-action forward edge on flat zero-cost terrain costs zero.
  CHECK(body_cost({0, 0, 0}, {1, 0, 0}, prims[0], cm, hm, params) == 0.0);

  // A lateral primitive with action cost 0.5 differs by exactly 0.5 * w_a.
  const double lateral = body_cost({0, 0, 0}, {0, 1, 0}, prims[3], cm, hm, params);
  CHECK(lateral == doctest::Approx(0.5 * params.weights.action).epsilon(1e-15));
}

TEST_CASE("body cost across a drop exceeds flat ground") {
  auto params = small_params();
  params.best_cells = 3;
  auto hm = flat_hm(80, 60);
  // 0.25 m drop for x >= 0.2.
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x)
      if (hm.spec().cell_center({x, y}).x() >= 0.2) hm.set_height({x, y}, -0.25);
  const auto cm = build_costmap(hm, {}, Rect{hm.spec().min_corner(), hm.spec().max_corner()});

  // Narrow regions that sit exactly on the drop-edge band at state {2,0,0}.
  MotionPrimitive prim;
  prim.id = 0;
  prim.displacement = {0.05, 0.0};
  for (int leg = 0; leg < 4; ++leg) {
    const Vec2 off = params.stance.offset(static_cast<LegId>(leg));
    prim.regions[leg].center = {0.10, off.y()};
    prim.regions[leg].half_extents = {0.02, 0.03};
  }

  const auto edge_terms = body_cost_terms({1, 0, 0}, {2, 0, 0}, prim, cm, hm, params);
  const auto flat_terms = body_cost_terms({-8, 0, 0}, {-7, 0, 0}, prim, cm, hm, params);
  CHECK(flat_terms.terrain == 0.0);
  CHECK(flat_terms.collision == 0.0);
  CHECK(edge_terms.terrain > flat_terms.terrain);
  CHECK(edge_terms.collision > flat_terms.collision);

  // Brute-force oracle: enumerate each leg's region cells and average the
  // best-n totals per leg.
  double expected_terrain = 0.0;
  for (int leg = 0; leg < 4; ++leg) {
    const Vec2 center = Vec2(0.1, 0.0) + prim.regions[leg].center;
    std::vector<double> totals;
    const auto& spec = cm.spec();
    for (int y = 0; y < spec.ny; ++y) {
      for (int x = 0; x < spec.nx; ++x) {
        const Vec2 d = spec.cell_center({x, y}) - center;
        if (std::abs(d.x()) <= prim.regions[leg].half_extents.x() + 1e-9 &&
            std::abs(d.y()) <= prim.regions[leg].half_extents.y() + 1e-9)
          totals.push_back(cm.valid({x, y}) ? cm.total({x, y}) : 1.0);
      }
    }
    std::sort(totals.begin(), totals.end());
    double mean = 0.0;
    for (int i = 0; i < 3; ++i) mean += totals[i];
    expected_terrain += mean / 3.0 / 4.0;
  }
  CHECK(edge_terms.terrain == doctest::Approx(expected_terrain).epsilon(1e-12));
  CHECK(expected_terrain > 0.0);
  // Collision: the region median is -0.125 (half the cells dropped), the
  // trailing band lies on high ground, so the excess is 0.125.
  CHECK(edge_terms.collision == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("body cost is translation invariant") {
  const auto params = small_params();
  auto hm_a = flat_hm(80, 60);
  auto hm_b = flat_hm(80, 60);
  test_util::Rng rng(13);
  for (int y = 0; y < 60; ++y) {
    for (int x = 0; x < 30; ++x) {
      const double z = rng.uniform(0.0, 0.1);
      hm_a.set_height({x + 10, y}, z);
      hm_b.set_height({x + 30, y}, z);  // shifted 20 cells = 0.4 m = 8 lattice cells
    }
  }
  const auto cm_a = flat_cm(hm_a);
  const auto cm_b = flat_cm(hm_b);
  const auto prims = small_primitives(params);
  const double a = body_cost({-5, 0, 0}, {-4, 0, 0}, prims[0], cm_a, hm_a, params);
  const double b = body_cost({3, 0, 0}, {4, 0, 0}, prims[0], cm_b, hm_b, params);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("heuristic arithmetic") {
  LatticeSpec lattice;
  const BodyState goal{20, 0, 0};
  CHECK(heuristic(goal, goal, 0.2, 0.25, lattice) == 0.0);
  CHECK(heuristic({0, 0, 0}, goal, 0.0, 0.25, lattice) == 0.0);
  // 20 cells * 0.05 = 1.0 m; ceil(1.0 / 0.25) = 4 steps at 0.2 each.
  CHECK(heuristic({0, 0, 0}, goal, 0.2, 0.25, lattice) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("ara_star equals uniform-cost search at epsilon 1") {
  const auto params = small_params();
  const auto prims = small_primitives(params, 0.1);

  AraConfig cfg;
  cfg.epsilon_schedule = {1.0};
  cfg.per_step_bound = admissible_step_bound(prims, params.weights);
  cfg.step_length = max_step_length(prims);

  // Flat 20x20 lattice window.
  {
    const auto hm = flat_hm(100, 100);
    const auto cm = flat_cm(hm);
    const BodyState start{-8, -8, 0}, goal{8, 8, 0};
    const auto res = ara_star(start, goal, prims, cm, hm, params, cfg);
    UcsOracle oracle;
    const double expect = oracle.run(start, goal, prims, cm, hm, params, cfg);
    CHECK(res.cost == expect);
    CHECK(res.epsilon_achieved == 1.0);
  }

  // Randomized 15x15 instances.
  test_util::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto hm = random_hm(rng, 90, 90);
    const auto cm = flat_cm(hm);
    const BodyState start{-6, -6, 0}, goal{6, 6, 0};
    const auto res = ara_star(start, goal, prims, cm, hm, params, cfg);
    UcsOracle oracle;
    CHECK(res.cost == oracle.run(start, goal, prims, cm, hm, params, cfg));
  }
}

TEST_CASE("ara_star anytime improvements are monotone") {
  const auto params = small_params();
  const auto prims = small_primitives(params, 0.1);
  test_util::Rng rng(77);
  const auto hm = random_hm(rng, 100, 100);
  const auto cm = flat_cm(hm);

  AraConfig cfg;
  cfg.epsilon_schedule = {3.0, 1.5, 1.0};
  cfg.per_step_bound = admissible_step_bound(prims, params.weights);
  cfg.step_length = max_step_length(prims);
  const auto res = ara_star({-8, -8, 0}, {8, 6, 4}, prims, cm, hm, params, cfg);
  REQUIRE(res.improvements.size() == 3);
  for (std::size_t i = 1; i < res.improvements.size(); ++i)
    CHECK(res.improvements[i].second <= res.improvements[i - 1].second);
  CHECK(res.epsilon_achieved == 1.0);
}

TEST_CASE("heuristic admissibility on random instances") {
  const auto params = small_params();
  const auto prims = small_primitives(params, 0.1);
  const double bound = admissible_step_bound(prims, params.weights);
  const double step = max_step_length(prims);

  test_util::Rng rng(5);
  AraConfig cfg;
  cfg.goal_position_tolerance = 1;
  cfg.goal_heading_tolerance = 1;
  for (int trial = 0; trial < 50; ++trial) {
    const auto hm = random_hm(rng, 90, 90);
    const auto cm = flat_cm(hm);
    const BodyState start{-6, -6, 0};
    const BodyState goal{rng.uniform_int(2, 6), rng.uniform_int(-6, 6), 0};

    // Exhaustive forward distances from the start.
    UcsOracle oracle;
    oracle.run(start, goal, prims, cm, hm, params, cfg);
    // True optimal start->goal cost; h(start) must not exceed it.
    double best = kInf;
    for (const auto& [key, g] : oracle.dist) {
      const auto [x, y, h] = key;
      int dh = std::abs(h - goal.heading) % params.lattice.headings;
      dh = std::min(dh, params.lattice.headings - dh);
      if (std::abs(x - goal.x) <= 1 && std::abs(y - goal.y) <= 1 && dh <= 1)
        best = std::min(best, g);
    }
    if (!std::isfinite(best)) continue;
    const double radius = cfg.goal_position_tolerance * params.lattice.resolution *
                          std::numbers::sqrt2;
    CHECK(heuristic(start, goal, bound, step, params.lattice, radius) <= best + 1e-12);
  }
}

TEST_CASE("unreachable goals raise NoPathError") {
  const auto params = small_params();
  const auto prims = small_primitives(params);
  const auto hm = flat_hm(100, 100);
  // Costmap covers only the left part; states beyond it have no finite edge.
  const auto cm = build_costmap(hm, {}, Rect{hm.spec().min_corner(), Vec2(0.1, 1.0)});

  AraConfig cfg;
  cfg.epsilon_schedule = {2.0, 1.0};
  cfg.max_expansions = 20000;
  CHECK_THROWS_AS(ara_star({-8, 0, 0}, {16, 0, 0}, prims, cm, hm, params, cfg), NoPathError);
}

TEST_CASE("solution paths chain kinematically") {
  const auto params = small_params();
  const auto prims = small_primitives(params, 0.1);
  test_util::Rng rng(41);
  const auto hm = random_hm(rng, 100, 100);
  const auto cm = flat_cm(hm);

  AraConfig cfg;
  cfg.epsilon_schedule = {1.5, 1.0};
  const auto res = ara_star({-8, -4, 0}, {8, 4, 2}, prims, cm, hm, params, cfg);
  REQUIRE(res.path.size() >= 2);
  CHECK(res.path.front().primitive_id == -1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < res.path.size(); ++i) {
    const auto succ = expand(res.path[i].state, prims, cm, hm, params);
    bool matched = false;
    for (const auto& s : succ) {
      if (s.primitive_id == res.path[i + 1].primitive_id) {
        CHECK(s.state == res.path[i + 1].state);
        total += s.cost;
        matched = true;
      }
    }
    CHECK(matched);
  }
  CHECK(total == doctest::Approx(res.cost).epsilon(1e-12));
}

TEST_CASE("primitive file round trip") {
  LatticeSpec lattice;
  NominalStance stance;
  const auto prims = default_primitives(lattice, stance);
  const auto path = std::filesystem::temp_directory_path() / "locoplan_prims.txt";
  save_primitives(prims, path.string());
  const auto loaded = load_primitives(path.string());
  REQUIRE(loaded.size() == prims.size());
  for (std::size_t i = 0; i < prims.size(); ++i) {
    CHECK(loaded[i].id == prims[i].id);
    CHECK(loaded[i].displacement == prims[i].displacement);
    CHECK(loaded[i].heading_change == prims[i].heading_change);
    CHECK(loaded[i].action_cost == prims[i].action_cost);
    for (int leg = 0; leg < 4; ++leg) {
      CHECK(loaded[i].regions[leg].center == prims[i].regions[leg].center);
      CHECK(loaded[i].regions[leg].half_extents == prims[i].regions[leg].half_extents);
    }
  }
  std::filesystem::remove(path);
}
