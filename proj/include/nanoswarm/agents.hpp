#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "geometry.hpp"
#include "world.hpp"

namespace nanoswarm {

struct KinematicLimits {
  double max_speed = 0.5;       // m/s
  double acceleration = 2.0;    // m/s^2, slew toward target speed
  double yaw_rate = kPi;        // rad/s, hover while rotating
  double footprint_radius = 0.05;
};

struct AgentBody {
  int id = 0;
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // forward speed, [0, max_speed]
  double footprint_radius = 0.05;
  double altitude = 0.3;  // metadata only

  bool operator==(const AgentBody&) const = default;
};

enum class Side { left, right };

struct MotionCommand {
  enum class Kind { cruise, stop, rotate, lateral };
  Kind kind = Kind::cruise;
  double delta = 0.0;     // rotate: remaining signed angle
  Side side = Side::left; // lateral direction
  double distance = 0.0;  // lateral: remaining distance

  static MotionCommand cruise() { return {}; }
  static MotionCommand stop() { return {Kind::stop}; }
  static MotionCommand rotate(double delta) {
    if (std::abs(delta) > 2.0 * kPi) throw DomainError("rotation delta outside [-2pi, 2pi]");
    return {Kind::rotate, delta};
  }
  static MotionCommand lateral(Side side, double distance) {
    if (!(distance > 0.0)) throw DomainError("lateral distance must be positive");
    return {Kind::lateral, 0.0, side, distance};
  }

  bool operator==(const MotionCommand&) const = default;
};

struct IntegrationStep {
  AgentBody body;
  MotionCommand remaining;
  bool completed = false;  // rotate/lateral finished this step
  Vec2 velocity;           // world-frame velocity applied over the step
};

// Advances one agent by dt under a command. Bounds clipping against the
// arena is left to the caller.
inline IntegrationStep integrate(const AgentBody& body, const MotionCommand& command, double dt,
                                 const KinematicLimits& limits = {}) {
  if (!(dt > 0.0)) throw DomainError("integration step must be positive");
  IntegrationStep out{body, command, false, {}};
  AgentBody& b = out.body;
  switch (command.kind) {
    case MotionCommand::Kind::cruise:
    case MotionCommand::Kind::stop: {
      const double target = command.kind == MotionCommand::Kind::cruise ? limits.max_speed : 0.0;
      const double step = limits.acceleration * dt;
      b.speed = b.speed < target ? std::min(target, b.speed + step) : std::max(target, b.speed - step);
      out.velocity = unit_from_angle(b.heading) * b.speed;
      b.position += out.velocity * dt;
      break;
    }
    case MotionCommand::Kind::rotate: {
      b.speed = 0.0;
      const double quantum = limits.yaw_rate * dt;
      double turn = command.delta;
      if (std::abs(turn) > quantum) {
        turn = std::copysign(quantum, command.delta);
      } else {
        out.completed = true;
      }
      b.heading = normalize_angle(b.heading + turn);
      out.remaining.delta = command.delta - turn;
      break;
    }
    case MotionCommand::Kind::lateral: {
      b.speed = 0.0;
      const double step = std::min(command.distance, limits.max_speed * dt);
      const double side = command.side == Side::left ? kPi / 2.0 : -kPi / 2.0;
      out.velocity = unit_from_angle(b.heading + side) * (step / dt);
      b.position += out.velocity * dt;
      out.remaining.distance = command.distance - step;
      if (out.remaining.distance <= 1e-12) {
        out.remaining.distance = 0.0;
        out.completed = true;
      }
      break;
    }
  }
  return out;
}

struct CrashEvent {
  double time = 0.0;
  int agent = 0;
  Vec2 position;
  Collider collider;  // obstacle, wall, or agent (index = other id)

  bool operator==(const CrashEvent&) const = default;
};

// Remembers which overlaps are ongoing so one contiguous overlap yields a
// single event.
class CrashTracker {
 public:
  std::vector<CrashEvent> detect(std::span<const AgentBody> bodies, const Arena& arena, double time) {
    std::set<Key> now;
    std::vector<CrashEvent> events;
    auto touch = [&](int agent, Collider c, Vec2 pos) {
      const Key k{agent, static_cast<int>(c.kind), c.index};
      now.insert(k);
      if (!active_.contains(k)) events.push_back({time, agent, pos, c});
    };
    for (const auto& b : bodies) {
      const double r = b.footprint_radius;
      const double walls[4] = {b.position.x, arena.width - b.position.x, b.position.y,
                               arena.height - b.position.y};
      for (int w = 0; w < 4; ++w)
        if (walls[w] - r < 0.0) touch(b.id, {Collider::Kind::wall, w}, b.position);
      for (std::size_t i = 0; i < arena.obstacles.size(); ++i)
        if (detail::surface_distance(b.position, arena.obstacles[i]) - r < 0.0)
          touch(b.id, {Collider::Kind::obstacle, static_cast<int>(i)}, b.position);
    }
    for (std::size_t i = 0; i < bodies.size(); ++i)
      for (std::size_t j = i + 1; j < bodies.size(); ++j) {
        const auto& a = bodies[i];
        const auto& b = bodies[j];
        if (distance(a.position, b.position) < a.footprint_radius + b.footprint_radius) {
          const int lo = std::min(a.id, b.id);
          const int hi = std::max(a.id, b.id);
          const auto& first = a.id == lo ? a : b;
          touch(lo, {Collider::Kind::agent, hi}, first.position);
        }
      }
    active_ = std::move(now);
    return events;
  }

  void reset() { active_.clear(); }

 private:
  using Key = std::tuple<int, int, int>;
  std::set<Key> active_;
};

// Stateless form: every current overlap is reported.
inline std::vector<CrashEvent> detect_crashes(std::span<const AgentBody> bodies, const Arena& arena,
                                              double time) {
  CrashTracker fresh;
  return fresh.detect(bodies, arena, time);
}

}  // namespace nanoswarm
