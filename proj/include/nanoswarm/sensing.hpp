#pragma once

// Per-tick sensor models: four single-beam ToF rangers, a parametric
// stand-in for the onboard collision-probability CNN, and noisy ego-motion.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "agents.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "world.hpp"

namespace nanoswarm {

enum class Zone { front = 0, back = 1, left = 2, right = 3 };

inline constexpr std::array<Zone, 4> kZones = {Zone::front, Zone::back, Zone::left, Zone::right};

inline std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::front: return "front";
    case Zone::back: return "back";
    case Zone::left: return "left";
    case Zone::right: return "right";
  }
  return "?";
}

inline std::optional<Zone> parse_zone(std::string_view s) {
  for (Zone z : kZones)
    if (to_string(z) == s) return z;
  return std::nullopt;
}

// Beam direction relative to heading; left is counter-clockwise.
inline double zone_offset(Zone z) {
  switch (z) {
    case Zone::front: return 0.0;
    case Zone::back: return kPi;
    case Zone::left: return kPi / 2.0;
    case Zone::right: return -kPi / 2.0;
  }
  return 0.0;
}

struct TofParams {
  double sigma = 0.02;               // range noise, m
  double jitter = deg_to_rad(2.0);   // beam yaw jitter, rad
  double max_range = 4.0;
  double min_range = 0.01;
  double period = 0.05;              // 20 Hz
};

struct TofReading {
  Zone zone = Zone::front;
  double distance = 4.0;
  double time = 0.0;
  bool operator==(const TofReading&) const = default;
};

inline std::vector<Disc> other_footprints(std::span<const AgentBody> bodies, std::size_t self) {
  std::vector<Disc> discs;
  discs.reserve(bodies.size());
  for (std::size_t i = 0; i < bodies.size(); ++i)
    if (i != self) discs.push_back({bodies[i].position, bodies[i].footprint_radius});
  return discs;
}

inline TofReading sample_tof(const Arena& arena, std::span<const AgentBody> bodies, std::size_t agent,
                             Zone zone, const TofParams& params, Rng& rng, double time = 0.0) {
  const AgentBody& self = bodies[agent];
  const double yaw = self.heading + zone_offset(zone) + rng.normal(0.0, params.jitter);
  const auto others = other_footprints(bodies, agent);
  const double hit = raycast(arena, self.position, unit_from_angle(yaw), params.max_range, others);
  const double noisy = hit + rng.normal(0.0, params.sigma);
  return {zone, std::clamp(noisy, params.min_range, params.max_range), time};
}

struct VisionProxyParams {
  double fov = 1.13;          // rad, ~65 deg horizontal
  double d0 = 1.5;            // m, distance at probability 0.5
  double slope = 0.3;         // m
  double noise_sigma = 0.05;
  double false_positive_floor = 0.02;

  void validate() const {
    if (!(fov > 0.0 && fov < kPi)) throw DomainError("vision fov must lie in (0, pi)");
    if (!(slope > 0.0)) throw DomainError("vision slope must be positive");
    if (!(noise_sigma >= 0.0)) throw DomainError("vision noise must be non-negative");
  }
};

struct VisionScore {
  double probability = 0.0;
  double frame_time = 0.0;
  bool operator==(const VisionScore&) const = default;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// Closest distance from the apex to the part of [a, b] inside the symmetric
// cone around heading. Infinity when no part of the segment is inside.
inline double segment_distance_in_cone(Vec2 apex, double heading, double half_angle, Vec2 a, Vec2 b) {
  const Vec2 ul = unit_from_angle(heading + half_angle);
  const Vec2 ur = unit_from_angle(heading - half_angle);
  const Vec2 normals[2] = {{ul.y, -ul.x}, {-ur.y, ur.x}};
  double t0 = 0.0;
  double t1 = 1.0;
  for (Vec2 n : normals) {
    const double f0 = n.dot(a - apex);
    const double df = n.dot(b - a);
    if (df == 0.0) {
      if (f0 < 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double t = -f0 / df;
    if (df > 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  const Vec2 d = b - a;
  return point_segment_distance(apex, a + d * t0, a + d * t1);
}

}  // namespace detail

// Nearest obstacle, wall or other agent whose bearing lies inside the camera
// field of view; discs are judged by their center bearing.
inline double vision_target_distance(const Arena& arena, std::span<const AgentBody> bodies, std::size_t agent,
                                     double fov) {
  const AgentBody& self = bodies[agent];
  const double half = fov / 2.0;
  const Vec2 o = self.position;
  double best = std::numeric_limits<double>::infinity();
  auto consider_disc = [&](Vec2 c, double r) {
    const Vec2 rel = c - o;
    const double bearing = normalize_angle(std::atan2(rel.y, rel.x) - self.heading);
    if (std::abs(bearing) <= half) best = std::min(best, std::max(0.0, rel.norm() - r));
  };
  auto consider_segment = [&](Vec2 a, Vec2 b) {
    best = std::min(best, detail::segment_distance_in_cone(o, self.heading, half, a, b));
  };
  const double w = arena.width;
  const double h = arena.height;
  consider_segment({0, 0}, {w, 0});
  consider_segment({w, 0}, {w, h});
  consider_segment({w, h}, {0, h});
  consider_segment({0, h}, {0, 0});
  for (const auto& obs : arena.obstacles) {
    if (obs.is_disc()) consider_disc(obs.as_disc().center, obs.as_disc().radius);
    else consider_segment(obs.as_segment().p1, obs.as_segment().p2);
  }
  for (std::size_t i = 0; i < bodies.size(); ++i)
    if (i != agent) consider_disc(bodies[i].position, bodies[i].footprint_radius);
  return best;
}

// Noise-free score for a target at distance d (may be infinite).
inline double vision_mean_score(double d, const VisionProxyParams& params) {
  if (std::isinf(d)) return 0.0;
  return logistic((params.d0 - d) / params.slope);
}

inline double vision_score_from_distance(double d, const VisionProxyParams& params, Rng& rng) {
  const double p = vision_mean_score(d, params) + rng.normal(0.0, params.noise_sigma);
  return std::clamp(p, params.false_positive_floor, 1.0);
}

inline VisionScore sample_vision(const Arena& arena, std::span<const AgentBody> bodies, std::size_t agent,
                                 const VisionProxyParams& params, Rng& rng, double time = 0.0) {
  const double d = vision_target_distance(arena, bodies, agent, params.fov);
  return {vision_score_from_distance(d, params, rng), time};
}

struct EgoMotionParams {
  double flow_sigma = 0.05;   // m/s
  double accel_sigma = 0.1;   // m/s^2
};

struct EgoMotionSample {
  Vec2 flow_velocity;  // body frame
  Vec2 acceleration;   // body frame
  double time = 0.0;
  bool operator==(const EgoMotionSample&) const = default;
};

inline EgoMotionSample sample_ego_motion(double heading, Vec2 velocity_world, Vec2 accel_world,
                                         const EgoMotionParams& params, Rng& rng, double time = 0.0) {
  const Vec2 v = rotate(velocity_world, -heading);
  const Vec2 a = rotate(accel_world, -heading);
  EgoMotionSample s;
  s.flow_velocity = {v.x + rng.normal(0.0, params.flow_sigma), v.y + rng.normal(0.0, params.flow_sigma)};
  s.acceleration = {a.x + rng.normal(0.0, params.accel_sigma), a.y + rng.normal(0.0, params.accel_sigma)};
  s.time = time;
  return s;
}

inline EgoMotionSample sample_ego_motion(const AgentBody& body, Vec2 accel_world, const EgoMotionParams& params,
                                         Rng& rng, double time = 0.0) {
  return sample_ego_motion(body.heading, unit_from_angle(body.heading) * body.speed, accel_world, params, rng,
                           time);
}

}  // namespace nanoswarm
