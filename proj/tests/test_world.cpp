#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <nanoswarm/world.hpp>

using namespace nanoswarm;

namespace {

Arena empty_house() { return build_preset(Preset::obstacle_free, 0); }

// Reference raycast by 1 mm marching. Segments are detected by a change of
// side between consecutive steps, discs by containment.
double march(const Arena& a, Vec2 o, Vec2 dir, double max_range) {
  const double step = 0.001;
  Vec2 prev = o;
  for (double s = step; s <= max_range + 1e-12; s += step) {
    const Vec2 p = o + dir * s;
    if (!a.contains(p)) return s;
    for (const auto& obs : a.obstacles) {
      if (obs.is_disc()) {
        if (distance(p, obs.as_disc().center) <= obs.as_disc().radius) return s;
      } else {
        const Segment& g = obs.as_segment();
        const Vec2 e = g.p2 - g.p1;
        const double c0 = e.cross(prev - g.p1);
        const double c1 = e.cross(p - g.p1);
        if ((c0 <= 0.0) != (c1 <= 0.0)) {
          const Vec2 x = prev + (p - prev) * (c0 / (c0 - c1));
          const double t = (x - g.p1).dot(e) / e.squared_norm();
          if (t >= 0.0 && t <= 1.0) return s;
        }
      }
    }
    prev = p;
  }
  return max_range;
}

}  // namespace

TEST(Raycast, ClampsToMaxRange) {
  EXPECT_DOUBLE_EQ(raycast(empty_house(), {1, 1}, {1, 0}, 4.0), 4.0);
}

TEST(Raycast, CollinearDiscHit) {
  Arena a = empty_house();
  a.obstacles.push_back(ObstacleShape::disc({2, 1}, 0.1));
  EXPECT_NEAR(raycast(a, {1, 1}, {1, 0}, 4.0), 0.9, 1e-12);
}

TEST(Raycast, WallDistance) {
  EXPECT_NEAR(raycast(empty_house(), {6.1, 1}, {1, 0}, 4.0), 0.5, 1e-12);
  EXPECT_NEAR(raycast(empty_house(), {1, 1}, {0, -1}, 4.0), 1.0, 1e-12);
}

TEST(Raycast, OriginOutsideThrows) {
  EXPECT_THROW(raycast(empty_house(), {-0.1, 1}, {1, 0}, 4.0), DomainError);
}

TEST(Raycast, ExtraDiscsBlock) {
  const Disc other{{1.5, 1}, 0.05};
  EXPECT_NEAR(raycast(empty_house(), {1, 1}, {1, 0}, 4.0, std::span<const Disc>(&other, 1)), 0.45, 1e-12);
}

TEST(Raycast, MatchesMarchingOracle) {
  Arena a = empty_house();
  a.obstacles.push_back(ObstacleShape::disc({2.0, 2.0}, 0.15));
  a.obstacles.push_back(ObstacleShape::disc({4.5, 3.0}, 0.02, true));
  a.obstacles.push_back(ObstacleShape::disc({3.3, 4.2}, 0.3));
  a.obstacles.push_back(ObstacleShape::segment({1.0, 4.0}, {2.5, 4.8}));
  a.obstacles.push_back(ObstacleShape::segment({5.0, 0.5}, {5.0, 2.0}));
  Rng rng(11);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 o{rng.uniform(0.1, 6.5), rng.uniform(0.1, 5.5)};
    if (min_clearance(a, o, 0.0) <= 0.0) continue;
    const Vec2 dir = unit_from_angle(rng.uniform(-kPi, kPi));
    const double got = raycast(a, o, dir, 4.0);
    const double ref = march(a, o, dir, 4.0);
    ASSERT_NEAR(got, ref, 0.0015) << "origin " << o.x << "," << o.y;
    ++checked;
  }
  EXPECT_GT(checked, 9000);
}

TEST(Clearance, IsolatedWallSegment) {
  Arena a{"open", 20, 20, {ObstacleShape::segment({10, 5}, {10, 15})}, {}};
  EXPECT_NEAR(min_clearance(a, {9.5, 10}, 0.05), 0.45, 1e-12);
}

TEST(Clearance, CoincidentThinDiscOverlaps) {
  Arena a = empty_house();
  a.obstacles.push_back(ObstacleShape::disc({3, 3}, 0.02, true));
  EXPECT_LT(min_clearance(a, {3, 3}, 0.05), 0.0);
}

TEST(Clearance, MatchesBruteForce) {
  Arena a = empty_house();
  a.obstacles.push_back(ObstacleShape::disc({2.0, 2.0}, 0.15));
  a.obstacles.push_back(ObstacleShape::segment({1.0, 4.0}, {2.5, 4.8}));
  a.obstacles.push_back(ObstacleShape::disc({4.5, 3.0}, 0.02, true));
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Vec2 c{rng.uniform(0, 6.6), rng.uniform(0, 5.6)};
    double best = std::min({c.x, 6.6 - c.x, c.y, 5.6 - c.y});
    best = std::min(best, distance(c, {2.0, 2.0}) - 0.15);
    best = std::min(best, distance(c, {4.5, 3.0}) - 0.02);
    for (int k = 0; k <= 20000; ++k) {
      const double t = k / 20000.0;
      best = std::min(best, distance(c, Vec2{1.0, 4.0} + Vec2{1.5, 0.8} * t));
    }
    ASSERT_NEAR(min_clearance(a, c, 0.05), best - 0.05, 1e-4);
  }
}

TEST(Coverage, SingleMark) {
  CoverageGrid g(empty_house());
  g.mark_visited({1, 1});
  EXPECT_EQ(g.visited_count(), 1u);
  g.mark_visited({1, 1});
  EXPECT_EQ(g.visited_count(), 1u);
}

TEST(Coverage, HouseGridSize) {
  CoverageGrid g(empty_house());
  EXPECT_EQ(g.columns(), 132u);
  EXPECT_EQ(g.rows(), 112u);
}

TEST(Coverage, StraightTraverseMatchesCellEnumeration) {
  CoverageGrid g(1.0, 0.05, 0.05);
  std::set<long> cells;
  // 0.5 m/s at 50 Hz: 1 cm per sample, samples 0..100.
  for (int k = 0; k <= 100; ++k) {
    g.mark_visited({k * 0.01, 0.025});
    cells.insert(std::min<long>(k / 5, 19));
  }
  EXPECT_EQ(g.visited_count(), cells.size());
  EXPECT_GE(g.visited_count(), 20u);
  EXPECT_LE(g.visited_count(), 21u);
}

TEST(Coverage, OutsideThrows) {
  CoverageGrid g(empty_house());
  EXPECT_THROW(g.mark_visited({7.0, 1.0}), DomainError);
}

TEST(Presets, ObstacleFreeIsEmpty) {
  const Arena a = build_preset(Preset::obstacle_free, 3);
  EXPECT_TRUE(a.obstacles.empty());
  EXPECT_DOUBLE_EQ(a.width, 6.6);
  EXPECT_DOUBLE_EQ(a.height, 5.6);
}

TEST(Presets, CorridorDimensions) {
  const Arena a = build_preset(Preset::narrow_corridor, 0);
  EXPECT_DOUBLE_EQ(a.width, 1.95);
  EXPECT_DOUBLE_EQ(a.height, 4.5);
  EXPECT_EQ(a.obstacles.size(), 8u);
  for (const auto& o : a.obstacles) EXPECT_TRUE(o.thin);
  EXPECT_GE(a.takeoff.size(), 4u);
}

TEST(Presets, PopulatedIsSeededAndSpaced) {
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const Arena a = build_preset(Preset::obstacle_populated, seed);
    EXPECT_EQ(a, build_preset(Preset::obstacle_populated, seed));
    ASSERT_EQ(a.obstacles.size(), 10u);
    for (std::size_t i = 0; i < a.obstacles.size(); ++i)
      for (std::size_t j = i + 1; j < a.obstacles.size(); ++j) {
        const Disc& p = a.obstacles[i].as_disc();
        const Disc& q = a.obstacles[j].as_disc();
        EXPECT_GE(distance(p.center, q.center) - p.radius - q.radius, 0.8);
      }
  }
  EXPECT_NE(build_preset(Preset::obstacle_populated, 1), build_preset(Preset::obstacle_populated, 2));
}

TEST(Presets, UnknownNameThrows) {
  EXPECT_THROW(build_preset("warehouse", 0), DomainError);
}

TEST(Arena, ValidationRejectsFatThinDisc) {
  Arena a = empty_house();
  a.obstacles.push_back(ObstacleShape::disc({3, 3}, 0.1, true));
  EXPECT_THROW(validate(a), DomainError);
}
