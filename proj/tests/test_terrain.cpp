#include <doctest.h>

#include "locoplan/costmap.hpp"
#include "locoplan/heightmap.hpp"
#include "locoplan/surface.hpp"

#include "test_util.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace locoplan;

namespace {

HeightMap flat_map(int nx, int ny, double z = 0.0, double res = 0.02) {
  GridSpec spec;
  spec.resolution = res;
  spec.nx = nx;
  spec.ny = ny;
  HeightMap hm(spec);
  hm.fill(z);
  return hm;
}

// Brute-force re-evaluation of one costmap cell straight from the
// definitions, sharing no code with build_costmap.
double oracle_total(const HeightMap& hm, const CostmapParams& p, const CellIndex& cell) {
  auto window_points = [&](double window) {
    std::vector<Vec3> pts;
    const auto& spec = hm.spec();
    const double half = window / 2.0 + 1e-9;
    for (int dy = -spec.ny; dy <= spec.ny; ++dy) {
      for (int dx = -spec.nx; dx <= spec.nx; ++dx) {
        const CellIndex c{cell.x + dx, cell.y + dy};
        if (!hm.known(c)) continue;
        if (std::abs(dx) * spec.resolution > half || std::abs(dy) * spec.resolution > half)
          continue;
        const Vec2 xy = spec.cell_center(c);
        pts.emplace_back(xy.x(), xy.y(), hm.height(c));
      }
    }
    return pts;
  };

  const auto dev_pts = window_points(p.height_dev_window);
  const auto slope_pts = window_points(p.slope_window);
  if (dev_pts.size() < 3 || slope_pts.size() < 3) return 1.0;

  double mean_z = 0.0;
  for (const auto& q : dev_pts) mean_z += q.z();
  mean_z /= dev_pts.size();
  double var = 0.0;
  for (const auto& q : dev_pts) var += (q.z() - mean_z) * (q.z() - mean_z);
  const double dev = std::sqrt(var / dev_pts.size());

  Vec3 centroid = Vec3::Zero();
  for (const auto& q : slope_pts) centroid += q;
  centroid /= slope_pts.size();
  std::array<std::array<double, 3>, 3> cov{};
  for (const auto& q : slope_pts) {
    const Vec3 d = q - centroid;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov[i][j] += d(i) * d(j) / slope_pts.size();
  }
  const auto eig = test_util::jacobi_eigen_3x3(cov);
  const double scale = std::max(eig.values[2], 1e-300);
  if (eig.values[1] <= 1e-12 * scale) return 1.0;
  Vec3 normal(eig.vectors[0][0], eig.vectors[0][1], eig.vectors[0][2]);
  if (normal.z() < 0.0) normal = -normal;
  const double slope = std::acos(std::clamp(normal.z(), -1.0, 1.0));
  const double sigma = std::max(eig.values[0], 0.0) /
                       (std::max(eig.values[0], 0.0) + eig.values[1] + eig.values[2]);
  const Vec2 xy = hm.spec().cell_center(cell);
  const Vec3 query(xy.x(), xy.y(), hm.height(cell));
  const double side = (centroid - query).dot(normal);
  const double c = p.curvature_scale * (side < 0.0 ? -sigma : sigma) + p.curvature_offset;

  const double costs[3] = {feature_cost(dev, p.height_dev), feature_cost(slope, p.slope),
                           curvature_cost(c, p.curvature)};
  const double ceilings[3] = {p.height_dev.max_cost, p.slope.max_cost, p.curvature.max_cost};
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (p.weights(k) <= 0.0) continue;
    num += p.weights(k) * costs[k];
    den += p.weights(k) * ceilings[k];
  }
  return std::clamp(num / den, 0.0, 1.0);
}

HeightMap gap_terrain(double gap_start, double gap_width, double depth) {
  GridSpec spec;
  spec.resolution = 0.02;
  spec.nx = 100;  // 2 m
  spec.ny = 50;   // 1 m
  HeightMap hm(spec);
  for (int y = 0; y < spec.ny; ++y) {
    for (int x = 0; x < spec.nx; ++x) {
      const double cx = spec.cell_center({x, y}).x();
      hm.set_height({x, y}, cx >= gap_start && cx < gap_start + gap_width ? -depth : 0.0);
    }
  }
  return hm;
}

}  // namespace

TEST_CASE("neighborhood window arithmetic") {
  auto hm = flat_map(10, 10);
  CHECK(hm.neighborhood({5, 5}, 0.06).size() == 9);
  CHECK(hm.neighborhood({5, 5}, 0.02).size() == 1);
  CHECK(hm.neighborhood({0, 0}, 0.06).size() == 4);  // corner clipped
  CHECK_THROWS_AS(hm.neighborhood({10, 5}, 0.06), std::out_of_range);
  CHECK_THROWS_AS(hm.neighborhood({5, 5}, 0.01), std::invalid_argument);
}

TEST_CASE("neighborhood filters unknown cells") {
  auto hm = flat_map(10, 10);
  hm.set_unknown({4, 5});
  hm.set_unknown({4, 4});
  hm.set_unknown({4, 6});
  CHECK(hm.neighborhood({5, 5}, 0.06).size() == 6);
}

TEST_CASE("estimate_surface on planes") {
  std::vector<Vec3> flat;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) flat.emplace_back(i * 0.02, j * 0.02, 0.1);
  const auto est = estimate_surface(flat);
  CHECK(est.normal.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.normal.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.normal.z() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.curvature <= 1e-12);

  // 45 degree plane through the x-axis: z = y.
  std::vector<Vec3> tilted;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tilted.emplace_back(i * 0.02, j * 0.02, j * 0.02);
  const auto t = estimate_surface(tilted);
  const double inv_sqrt2 = std::sqrt(0.5);
  CHECK(t.normal.x() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(t.normal.y() == doctest::Approx(-inv_sqrt2).epsilon(1e-9));
  CHECK(t.normal.z() == doctest::Approx(inv_sqrt2).epsilon(1e-9));
  CHECK(t.curvature <= 1e-12);
}

TEST_CASE("estimate_surface degenerate inputs") {
  std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(estimate_surface(two), std::invalid_argument);
  std::vector<Vec3> collinear{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  CHECK_THROWS_AS(estimate_surface(collinear), std::invalid_argument);
}

TEST_CASE("estimate_surface matches brute-force eigen oracle") {
  test_util::Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> pts;
    const int n = rng.uniform_int(5, 24);
    for (int i = 0; i < n; ++i)
      pts.emplace_back(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05));
    const auto est = estimate_surface(pts);

    Vec3 centroid = Vec3::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= pts.size();
    std::array<std::array<double, 3>, 3> cov{};
    for (const auto& p : pts) {
      const Vec3 d = p - centroid;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) cov[i][j] += d(i) * d(j) / pts.size();
    }
    const auto eig = test_util::jacobi_eigen_3x3(cov);
    Vec3 n0(eig.vectors[0][0], eig.vectors[0][1], eig.vectors[0][2]);
    if (n0.z() < 0.0) n0 = -n0;
    const double angle = std::acos(std::clamp(est.normal.dot(n0), -1.0, 1.0));
    CHECK(angle <= 1e-7);
    const double sigma = std::max(eig.values[0], 0.0) /
                         (std::max(eig.values[0], 0.0) + eig.values[1] + eig.values[2]);
    CHECK(std::abs(est.curvature - sigma) <= 1e-9);
    CHECK(est.curvature >= 0.0);
    CHECK(est.curvature <= 1.0 / 3.0 + 1e-12);
    CHECK(std::abs(est.normal.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("surface curvature is rigid-motion invariant") {
  test_util::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 12; ++i)
      pts.emplace_back(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05));
    const auto base = estimate_surface(pts);

    const Eigen::AngleAxisd rot(rng.uniform(0, 3.0), Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    const Vec3 shift(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(rot * p + shift);
    const auto est = estimate_surface(moved);
    CHECK(std::abs(est.curvature - base.curvature) <= 1e-9);
  }
}

TEST_CASE("feature cost anchor points") {
  const FeatureParams height_dev{0.01, 0.06, 1.0};
  CHECK(feature_cost(0.005, height_dev) == 0.0);
  CHECK(feature_cost(0.06, height_dev) == 1.0);
  CHECK(feature_cost(0.035, height_dev) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const FeatureParams slope{M_PI / 180.0, 70.0 * M_PI / 180.0, 1.0};
  CHECK(feature_cost(M_PI / 360.0, slope) == 0.0);
  CHECK(feature_cost(75.0 * M_PI / 180.0, slope) == 1.0);

  // Monotone non-decreasing.
  double prev = -1.0;
  for (double f = 0.0; f <= 0.08; f += 1e-3) {
    const double c = feature_cost(f, height_dev);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("curvature cost anchor points") {
  const CurvatureParams p{};
  CHECK(curvature_cost(7.0, p) == 0.0);
  CHECK(curvature_cost(-7.0, p) == 1.0);
  CHECK(curvature_cost(0.0, p) == doctest::Approx(1.0 - std::log(6.0 / 15.0)).epsilon(1e-12));
  CHECK(curvature_cost(10.0, p) == 1.0);

  // Non-increasing between the crack barrier and the mild band.
  double prev = std::numeric_limits<double>::infinity();
  for (double c = -5.9; c < 6.0; c += 0.05) {
    const double v = curvature_cost(c, p);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("flat terrain has zero cost everywhere") {
  auto hm = flat_map(60, 40, 0.1);
  const auto cm = build_costmap(hm, {}, Rect{{0.0, 0.0}, {1.2, 0.8}});
  CHECK(cm.valid_count() == 60 * 40);
  for (int y = 0; y < cm.spec().ny; ++y)
    for (int x = 0; x < cm.spec().nx; ++x) CHECK(cm.total({x, y}) == 0.0);
}

TEST_CASE("single-weight costmap equals normalized height deviation cost") {
  auto hm = gap_terrain(1.0, 0.25, 0.3);
  CostmapParams params;
  params.weights = Eigen::Vector3d(1.0, 0.0, 0.0);
  const auto cm = build_costmap(hm, params, Rect{{0.0, 0.0}, {2.0, 1.0}});
  for (int y = 0; y < cm.spec().ny; ++y) {
    for (int x = 0; x < cm.spec().nx; ++x) {
      if (!cm.valid({x, y})) continue;
      const std::size_t i = cm.spec().flat({x, y});
      const double cost = cm.layers().height_dev_cost[i];
      if (std::isnan(cost)) continue;  // risky cell
      CHECK(cm.total({x, y}) ==
            doctest::Approx(std::clamp(cost / params.height_dev.max_cost, 0.0, 1.0))
                .epsilon(1e-15));
    }
  }
}

TEST_CASE("gap terrain costs: edges risky, interior calm, oracle equality") {
  auto hm = gap_terrain(1.0, 0.25, 0.3);
  CostmapParams params;
  const auto cm = build_costmap(hm, params, Rect{{0.0, 0.0}, {2.0, 1.0}});

  const int y = 25;
  // Cells within one window of the gap edge vs cells >= 10 cm away.
  const int edge_cell = 49;      // center 0.99, adjacent to the drop at x=1.0
  const int far_cell = 44;       // center 0.89, 11 cm from the edge
  CHECK(cm.total({edge_cell, y}) > cm.total({far_cell, y}));
  CHECK(cm.total({far_cell, y}) == 0.0);

  // Brute-force per-cell oracle over a band spanning the gap.
  for (int x = 40; x < 70; ++x) {
    const double expect = oracle_total(hm, params, {x, y});
    CHECK(cm.total({x, y}) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("costmap totals invariant under weight scaling") {
  auto hm = gap_terrain(1.0, 0.25, 0.3);
  CostmapParams base;
  const auto cm0 = build_costmap(hm, base, Rect{{0.5, 0.0}, {1.6, 1.0}});
  for (const double s : {0.5, 2.0, 10.0}) {
    CostmapParams scaled = base;
    scaled.weights *= s;
    const auto cm1 = build_costmap(hm, scaled, Rect{{0.5, 0.0}, {1.6, 1.0}});
    for (int y = 0; y < cm0.spec().ny; ++y) {
      for (int x = 0; x < cm0.spec().nx; ++x) {
        if (!cm0.valid({x, y})) continue;
        CHECK(cm1.total({x, y}) == doctest::Approx(cm0.total({x, y})).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("cells without surface support are maximally risky") {
  GridSpec spec;
  spec.resolution = 0.02;
  spec.nx = 10;
  spec.ny = 10;
  HeightMap hm(spec);
  hm.set_height({3, 3}, 0.0);
  hm.set_height({3, 4}, 0.0);  // only two known cells in any window
  const auto cm = build_costmap(hm, {}, Rect{{0.0, 0.0}, {0.2, 0.2}});
  CHECK(cm.valid_count() == 2);
  CHECK(cm.total({3, 3}) == 1.0);
  CHECK(cm.total({3, 4}) == 1.0);
}

TEST_CASE("all-unknown area yields an empty costmap") {
  GridSpec spec;
  spec.resolution = 0.02;
  spec.nx = 10;
  spec.ny = 10;
  HeightMap hm(spec);
  const auto cm = build_costmap(hm, {}, Rect{{0.0, 0.0}, {0.2, 0.2}});
  CHECK(cm.valid_count() == 0);
  CHECK_THROWS(build_costmap(hm, {}, Rect{{5.0, 5.0}, {6.0, 6.0}}));   // misses grid
  CHECK_THROWS(build_costmap(hm, {}, Rect{{0.1, 0.1}, {0.1, 0.1}}));   // empty rect
}

TEST_CASE("incremental update equals full recomputation") {
  auto hm = gap_terrain(1.0, 0.25, 0.3);
  CostmapParams params;
  const Rect aoi{{0.2, 0.1}, {1.8, 0.9}};
  auto cm = build_costmap(hm, params, aoi);

  std::vector<CellIndex> edited{{50, 20}, {51, 20}, {52, 21}, {10, 10}, {99, 49}};
  test_util::Rng rng(3);
  for (const auto& e : edited) hm.set_height(e, rng.uniform(-0.1, 0.2));
  hm.set_unknown({53, 22});
  std::vector<CellIndex> all_edits = edited;
  all_edits.push_back({53, 22});

  update_costmap(cm, hm, all_edits);
  const auto full = build_costmap(hm, params, aoi);
  REQUIRE(full.spec().nx == cm.spec().nx);
  REQUIRE(full.spec().ny == cm.spec().ny);
  for (int y = 0; y < full.spec().ny; ++y) {
    for (int x = 0; x < full.spec().nx; ++x) {
      CHECK(full.valid({x, y}) == cm.valid({x, y}));
      if (full.valid({x, y})) CHECK(full.total({x, y}) == cm.total({x, y}));
    }
  }
}

TEST_CASE("height queries and quantization") {
  auto hm = flat_map(10, 10, 0.10);
  CHECK(hm.height_at({0.05, 0.05}) == doctest::Approx(0.10).epsilon(1e-15));

  hm.set_height({2, 2}, 0.1234);
  CHECK(hm.height({2, 2}) == doctest::Approx(0.12).epsilon(1e-15));

  CHECK_THROWS_AS(hm.height_at({-0.01, 0.05}), std::out_of_range);
  hm.set_unknown({1, 1});
  CHECK_THROWS(hm.height_at({0.03, 0.03}));
  CHECK(!hm.try_height_at({0.03, 0.03}).has_value());
}

TEST_CASE("heightmap file round trip is bit exact") {
  GridSpec spec;
  spec.resolution = 0.02;
  spec.z_resolution = 0.01;
  spec.nx = 17;
  spec.ny = 9;
  spec.origin = {-0.3, 0.7};
  HeightMap hm(spec);
  test_util::Rng rng(11);
  for (int y = 0; y < spec.ny; ++y)
    for (int x = 0; x < spec.nx; ++x)
      if (rng.uniform() < 0.8) hm.set_height({x, y}, rng.uniform(-1.0, 1.0));

  const auto path = std::filesystem::temp_directory_path() / "locoplan_hm_roundtrip.txt";
  hm.save(path.string());
  const auto loaded = HeightMap::load(path.string());
  REQUIRE(loaded.spec().nx == spec.nx);
  REQUIRE(loaded.spec().ny == spec.ny);
  CHECK(loaded.spec().origin == spec.origin);
  for (int y = 0; y < spec.ny; ++y) {
    for (int x = 0; x < spec.nx; ++x) {
      REQUIRE(loaded.known({x, y}) == hm.known({x, y}));
      if (hm.known({x, y})) CHECK(loaded.height({x, y}) == hm.height({x, y}));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("costmap csv export") {
  auto hm = flat_map(10, 10);
  const auto cm = build_costmap(hm, {}, Rect{{0.0, 0.0}, {0.2, 0.2}});
  const auto path = std::filesystem::temp_directory_path() / "locoplan_cm.csv";
  cm.export_csv(path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,height_dev,slope,curvature,total");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == cm.valid_count());
  std::filesystem::remove(path);
}
