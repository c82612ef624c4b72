#pragma once

// Static 2D arena: obstacle primitives, ray and clearance queries, and the
// coverage grid used for the exploration metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

namespace nanoswarm {

struct Segment {
  Vec2 p1;
  Vec2 p2;
  bool operator==(const Segment&) const = default;
};

struct Disc {
  Vec2 center;
  double radius = 0.0;
  bool operator==(const Disc&) const = default;
};

// Thin discs model chair legs and tripod feet.
inline constexpr double kThinRadiusLimit = 0.05;

struct ObstacleShape {
  std::variant<Segment, Disc> shape;
  bool thin = false;

  static ObstacleShape segment(Vec2 a, Vec2 b) { return {Segment{a, b}, false}; }
  static ObstacleShape disc(Vec2 c, double r, bool thin = false) { return {Disc{c, r}, thin}; }

  bool is_disc() const { return std::holds_alternative<Disc>(shape); }
  const Disc& as_disc() const { return std::get<Disc>(shape); }
  const Segment& as_segment() const { return std::get<Segment>(shape); }
  bool operator==(const ObstacleShape&) const = default;
};

struct Arena {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  std::vector<ObstacleShape> obstacles;
  // Known take-off positions, in order of agent id.
  std::vector<Vec2> takeoff;

  bool contains(Vec2 p) const { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }
  bool operator==(const Arena&) const = default;
};

// Throws DomainError when the arena breaks a structural invariant.
inline void validate(const Arena& arena) {
  if (!(arena.width > 0.0) || !(arena.height > 0.0))
    throw DomainError("arena dimensions must be positive");
  for (std::size_t i = 0; i < arena.obstacles.size(); ++i) {
    const auto& obs = arena.obstacles[i];
    const std::string where = "obstacle " + std::to_string(i);
    if (obs.is_disc()) {
      const Disc& d = obs.as_disc();
      if (!(d.radius > 0.0)) throw DomainError(where + ": disc radius must be positive");
      if (obs.thin && d.radius > kThinRadiusLimit)
        throw DomainError(where + ": thin discs must have radius <= 0.05 m");
      if (d.center.x - d.radius < 0.0 || d.center.x + d.radius > arena.width ||
          d.center.y - d.radius < 0.0 || d.center.y + d.radius > arena.height)
        throw DomainError(where + ": disc leaves the arena");
    } else {
      const Segment& s = obs.as_segment();
      if (obs.thin) throw DomainError(where + ": only discs may be thin");
      if (s.p1 == s.p2) throw DomainError(where + ": degenerate segment");
      if (!arena.contains(s.p1) || !arena.contains(s.p2))
        throw DomainError(where + ": segment leaves the arena");
    }
  }
  for (Vec2 t : arena.takeoff)
    if (!arena.contains(t)) throw DomainError("take-off position outside the arena");
}

namespace detail {

// Distance along a unit ray to a disc surface, or nullopt if missed.
// An origin inside the disc reports 0.
inline std::optional<double> ray_disc(Vec2 origin, Vec2 dir, const Disc& d) {
  const Vec2 oc = origin - d.center;
  const double c = oc.squared_norm() - d.radius * d.radius;
  if (c <= 0.0) return 0.0;
  const double b = oc.dot(dir);
  if (b >= 0.0) return std::nullopt;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  return -b - std::sqrt(disc);
}

inline std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.p2 - s.p1;
  const double denom = dir.cross(e);
  const Vec2 w = s.p1 - origin;
  if (denom == 0.0) {
    // Parallel. Collinear segments are hit at their nearest endpoint ahead.
    if (w.cross(dir) != 0.0) return std::nullopt;
    const double t1 = w.dot(dir);
    const double t2 = (s.p2 - origin).dot(dir);
    if (t1 < 0.0 && t2 < 0.0) return std::nullopt;
    if (t1 <= 0.0 || t2 <= 0.0) return 0.0;
    return std::min(t1, t2);
  }
  const double t = w.cross(e) / denom;
  const double u = w.cross(dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

// Distance from origin to the rectangle boundary along dir; origin is inside.
inline double ray_boundary(const Arena& arena, Vec2 origin, Vec2 dir) {
  double t = std::numeric_limits<double>::infinity();
  if (dir.x > 0.0) t = std::min(t, (arena.width - origin.x) / dir.x);
  if (dir.x < 0.0) t = std::min(t, -origin.x / dir.x);
  if (dir.y > 0.0) t = std::min(t, (arena.height - origin.y) / dir.y);
  if (dir.y < 0.0) t = std::min(t, -origin.y / dir.y);
  return t;
}

inline double surface_distance(Vec2 p, const ObstacleShape& obs) {
  if (obs.is_disc()) {
    const Disc& d = obs.as_disc();
    return distance(p, d.center) - d.radius;
  }
  const Segment& s = obs.as_segment();
  return point_segment_distance(p, s.p1, s.p2);
}

inline double boundary_distance(const Arena& arena, Vec2 p) {
  return std::min(std::min(p.x, arena.width - p.x), std::min(p.y, arena.height - p.y));
}

}  // namespace detail

// Distance to the first obstacle, boundary wall or extra disc along the ray,
// clamped to max_range. Extra discs carry other agents' footprints.
inline double raycast(const Arena& arena, Vec2 origin, Vec2 direction, double max_range,
                      std::span<const Disc> extra_discs = {}) {
  if (!arena.contains(origin)) throw DomainError("raycast origin outside the arena");
  double best = detail::ray_boundary(arena, origin, direction);
  for (const auto& obs : arena.obstacles) {
    const auto hit = obs.is_disc() ? detail::ray_disc(origin, direction, obs.as_disc())
                                   : detail::ray_segment(origin, direction, obs.as_segment());
    if (hit && *hit < best) best = *hit;
  }
  for (const auto& d : extra_discs) {
    const auto hit = detail::ray_disc(origin, direction, d);
    if (hit && *hit < best) best = *hit;
  }
  return std::min(best, max_range);
}

// What a footprint is closest to. Walls are indexed 0..3 as
// {x=0, x=width, y=0, y=height}.
struct Collider {
  enum class Kind { obstacle, wall, agent };
  Kind kind = Kind::obstacle;
  int index = 0;
  bool operator==(const Collider&) const = default;
};

struct ClearanceQuery {
  double clearance = std::numeric_limits<double>::infinity();
  Collider nearest;
};

inline ClearanceQuery nearest_clearance(const Arena& arena, Vec2 center, double radius) {
  ClearanceQuery q;
  const double walls[4] = {center.x, arena.width - center.x, center.y, arena.height - center.y};
  for (int w = 0; w < 4; ++w) {
    if (walls[w] < q.clearance) q = {walls[w], {Collider::Kind::wall, w}};
  }
  for (std::size_t i = 0; i < arena.obstacles.size(); ++i) {
    const double d = detail::surface_distance(center, arena.obstacles[i]);
    if (d < q.clearance) q = {d, {Collider::Kind::obstacle, static_cast<int>(i)}};
  }
  q.clearance -= radius;
  return q;
}

// Signed gap between a footprint disc and the nearest obstacle or wall.
// Negative means overlap.
inline double min_clearance(const Arena& arena, Vec2 center, double radius) {
  return nearest_clearance(arena, center, radius).clearance;
}

class CoverageGrid {
 public:
  CoverageGrid(double width, double height, double cell_size = 0.05)
      : width_(width), height_(height), cell_size_(cell_size),
        nx_(cells_along(width, cell_size)), ny_(cells_along(height, cell_size)),
        visited_(nx_ * ny_, 0) {
    if (!(width > 0.0) || !(height > 0.0) || !(cell_size > 0.0))
      throw DomainError("coverage grid dimensions must be positive");
  }

  explicit CoverageGrid(const Arena& arena, double cell_size = 0.05)
      : CoverageGrid(arena.width, arena.height, cell_size) {}

  void mark_visited(Vec2 p) {
    if (p.x < 0.0 || p.x > width_ || p.y < 0.0 || p.y > height_)
      throw DomainError("coverage position outside the arena");
    const std::size_t ix = std::min(static_cast<std::size_t>(p.x / cell_size_), nx_ - 1);
    const std::size_t iy = std::min(static_cast<std::size_t>(p.y / cell_size_), ny_ - 1);
    auto& cell = visited_[iy * nx_ + ix];
    if (!cell) {
      cell = 1;
      ++count_;
    }
  }

  std::size_t visited_count() const { return count_; }
  std::size_t total_cells() const { return nx_ * ny_; }
  double fraction() const { return static_cast<double>(count_) / static_cast<double>(total_cells()); }
  double cell_size() const { return cell_size_; }
  std::size_t columns() const { return nx_; }
  std::size_t rows() const { return ny_; }

 private:
  static std::size_t cells_along(double extent, double cell) {
    // Guard against 6.6/0.05 = 131.99999999999997 style round-off.
    const double n = extent / cell;
    const double r = std::round(n);
    return static_cast<std::size_t>(std::abs(n - r) < 1e-9 ? r : std::ceil(n));
  }

  double width_;
  double height_;
  double cell_size_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<std::uint8_t> visited_;
  std::size_t count_ = 0;
};

enum class Preset { obstacle_free, obstacle_populated, narrow_corridor };

inline std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::obstacle_free: return "obstacle_free";
    case Preset::obstacle_populated: return "obstacle_populated";
    case Preset::narrow_corridor: return "narrow_corridor";
  }
  return "?";
}

inline std::optional<Preset> parse_preset(std::string_view name) {
  for (Preset p : {Preset::obstacle_free, Preset::obstacle_populated, Preset::narrow_corridor})
    if (to_string(p) == name) return p;
  return std::nullopt;
}

struct PresetLayout {
  double house_width = 6.6;
  double house_height = 5.6;
  double corridor_width = 1.95;
  double corridor_height = 4.5;
  int thin_count = 8;
  double thin_radius = 0.02;
  int thick_count = 2;
  double thick_radius = 0.15;
  double min_gap = 0.8;
  double wall_gap = 0.5;
  int corridor_row_length = 4;
  double corridor_lane = 0.9;
};

namespace detail {

inline std::vector<Vec2> house_takeoff() {
  return {{1.0, 1.0}, {5.6, 4.6}, {5.6, 1.0}, {1.0, 4.6},
          {3.3, 1.0}, {3.3, 4.6}, {1.0, 2.8}, {5.6, 2.8}};
}

}  // namespace detail

// Builds one of the named arenas. The result is a pure function of
// (preset, seed); only obstacle_populated consumes the seed.
inline Arena build_preset(Preset preset, std::uint64_t seed, const PresetLayout& layout = {}) {
  Arena arena;
  arena.name = std::string(to_string(preset));
  switch (preset) {
    case Preset::obstacle_free:
      arena.width = layout.house_width;
      arena.height = layout.house_height;
      arena.takeoff = detail::house_takeoff();
      break;
    case Preset::obstacle_populated: {
      arena.width = layout.house_width;
      arena.height = layout.house_height;
      arena.takeoff = detail::house_takeoff();
      Rng rng(derive_seed(seed, "arena.obstacle_populated"));
      auto place = [&](double radius, bool thin) {
        const double lo = layout.wall_gap + radius;
        for (int attempt = 0; attempt < 100000; ++attempt) {
          const Vec2 c{rng.uniform(lo, arena.width - lo), rng.uniform(lo, arena.height - lo)};
          bool ok = true;
          for (const auto& o : arena.obstacles) {
            const Disc& d = o.as_disc();
            if (distance(c, d.center) - d.radius - radius < layout.min_gap) { ok = false; break; }
          }
          for (Vec2 t : arena.takeoff)
            if (ok && distance(c, t) - radius < layout.min_gap) ok = false;
          if (ok) {
            arena.obstacles.push_back(ObstacleShape::disc(c, radius, thin));
            return;
          }
        }
        throw DomainError("obstacle placement did not converge");
      };
      for (int i = 0; i < layout.thick_count; ++i) place(layout.thick_radius, false);
      for (int i = 0; i < layout.thin_count; ++i) place(layout.thin_radius, true);
      break;
    }
    case Preset::narrow_corridor: {
      arena.width = layout.corridor_width;
      arena.height = layout.corridor_height;
      const double mid = arena.height / 2.0;
      const double half_lane = layout.corridor_lane / 2.0;
      const double span = arena.width / (layout.corridor_row_length + 1);
      for (double y : {mid - half_lane, mid + half_lane})
        for (int i = 1; i <= layout.corridor_row_length; ++i)
          arena.obstacles.push_back(ObstacleShape::disc({span * i, y}, layout.thin_radius, true));
      arena.takeoff = {{arena.width / 2.0, 0.4}, {arena.width / 2.0, arena.height - 0.4}, {0.25, 0.4}, {arena.width - 0.25, arena.height - 0.4}};
      break;
    }
  }
  validate(arena);
  return arena;
}

inline Arena build_preset(std::string_view name, std::uint64_t seed) {
  const auto p = parse_preset(name);
  if (!p) throw DomainError("unknown arena preset '" + std::string(name) + "'");
  return build_preset(*p, seed);
}

}  // namespace nanoswarm
