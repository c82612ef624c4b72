#pragma once

// Single-mission simulation loop. One run is single-threaded and owns all
// of its state; every random stream is derived from the mission seed.
//
// Clocks on the 100 Hz base tick: ToF and UWB slots every 5 ticks (20 Hz),
// policy every 2 ticks (50 Hz), ego-motion and ISCA every tick, CNN frames
// whenever the compute model grants a slot.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "agents.hpp"
#include "avoidance.hpp"
#include "compute.hpp"
#include "config.hpp"
#include "event_log.hpp"
#include "localization.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "uwb.hpp"
#include "world.hpp"

namespace nanoswarm {

inline constexpr int kSensorDivider = 5;   // 20 Hz
inline constexpr int kPolicyDivider = 2;   // 50 Hz
inline constexpr double kCrashSetback = 0.1;

inline double tick_time(long long k) { return static_cast<double>(k) / kTicksPerSecond; }

struct MissionResult {
  EventLog log;
  MissionReport report;
};

namespace detail {

struct AgentRuntime {
  AgentBody body;
  Vec2 velocity;       // world frame, over the last step
  Vec2 prev_velocity;  // for the accelerometer model
  PolicyState policy;
  MotionCommand command = MotionCommand::cruise();
  OcaState oca;
  ZoneLatch latch;
  EkfState ekf;
  BeaconTable beacons;
  std::vector<IscaDetection> isca_now;
  Rng rng_tof;
  Rng rng_vision;
  Rng rng_ego;
  Rng rng_policy;
};

inline std::string zone_summary(const ZoneFlags& z) {
  std::string s;
  for (Zone zone : kZones)
    if (z[zone]) s += (s.empty() ? "" : "+") + std::string(to_string(zone));
  return s.empty() ? "clear" : s;
}

// Direction that moves a footprint out of contact when it has no velocity.
inline Vec2 escape_direction(const Arena& arena, const std::vector<AgentRuntime>& agents, const AgentRuntime& self,
                             const Collider& c) {
  const Vec2 p = self.body.position;
  Vec2 away;
  switch (c.kind) {
    case Collider::Kind::wall: {
      static const Vec2 normals[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      away = normals[c.index];
      break;
    }
    case Collider::Kind::obstacle: {
      const auto& obs = arena.obstacles[c.index];
      const Vec2 q = obs.is_disc() ? obs.as_disc().center
                                   : closest_point_on_segment(p, obs.as_segment().p1, obs.as_segment().p2);
      away = p - q;
      break;
    }
    case Collider::Kind::agent:
      for (const auto& other : agents)
        if (other.body.id != self.body.id && (other.body.id == c.index || self.body.id == c.index))
          away = p - other.body.position;
      break;
  }
  const double n = away.norm();
  return n > 1e-12 ? away / n : unit_from_angle(self.body.heading + kPi);
}

inline Vec2 clip_to(const Arena& arena, Vec2 p) {
  return {std::clamp(p.x, 0.0, arena.width), std::clamp(p.y, 0.0, arena.height)};
}

}  // namespace detail

inline MissionResult run_mission(const MissionConfig& config) {
  config.validate_or_throw();
  const Arena arena = config.arena();
  const ScheduleModel compute = config.compute_model();
  const double cnn_rate = config.mode == SensingMode::tof_and_vision ? collision_cnn_rate(compute) : 0.0;
  const double dt = 1.0 / kTicksPerSecond;
  const long long ticks = std::llround(config.duration * kTicksPerSecond);
  const int n = config.swarm_size;
  const long long slot_divider = slot_ticks(config);

  EventLog log(config);
  std::vector<detail::AgentRuntime> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    detail::AgentRuntime a{
        .body = {},
        .velocity = {},
        .prev_velocity = {},
        .policy = {},
        .command = MotionCommand::cruise(),
        .oca = {},
        .latch = ZoneLatch(config.latch_hold),
        .ekf = EkfState::at_takeoff(arena.takeoff[i]),
        .beacons = {},
        .isca_now = {},
        .rng_tof = Rng(derive_seed(config.seed, "tof", idx)),
        .rng_vision = Rng(derive_seed(config.seed, "vision", idx)),
        .rng_ego = Rng(derive_seed(config.seed, "ego", idx)),
        .rng_policy = Rng(derive_seed(config.seed, "policy", idx)),
    };
    a.body.id = i;
    a.body.position = arena.takeoff[i];
    a.body.footprint_radius = config.kinematics.footprint_radius;
    if (config.takeoff_heading) {
      a.body.heading = normalize_angle(*config.takeoff_heading);
    } else {
      Rng h(derive_seed(config.seed, "takeoff", idx));
      a.body.heading = normalize_angle(h.uniform(-kPi, kPi));
    }
    // Every agent knows every take-off position.
    for (int j = 0; j < n; ++j)
      if (j != i) a.beacons[j] = PositionBeacon{j, arena.takeoff[j], 0.0};
    agents.push_back(std::move(a));
  }

  Rng rng_uwb(derive_seed(config.seed, "uwb"));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::optional<RangingSchedule> schedule;
  if (n >= 2) schedule.emplace(order, config.uwb_slot_period);

  CrashTracker crashes;
  std::vector<AgentBody> bodies(n);
  auto refresh_bodies = [&] {
    for (int i = 0; i < n; ++i) bodies[i] = agents[i].body;
  };

  bool beacons_fresh = false;
  auto broadcast = [&](double t) {
    beacons_fresh = true;
    std::vector<PositionBeacon> estimates;
    for (const auto& a : agents) estimates.push_back({a.body.id, a.ekf.position(), t});
    std::vector<BeaconTable> tables;
    for (auto& a : agents) tables.push_back(std::move(a.beacons));
    const auto delivered = broadcast_beacons(estimates, tables, config.channel, rng_uwb);
    for (int i = 0; i < n; ++i) agents[i].beacons = std::move(tables[i]);
    for (const auto& [receiver, b] : delivered)
      log.append(log_record::Beacon{t, b.sender, receiver, b.estimated_position.x, b.estimated_position.y});
  };

  for (long long k = 0; k <= ticks; ++k) {
    const double t = tick_time(k);
    for (const auto& a : agents)
      log.append(log_record::Trajectory{t, a.body.id, a.body.position.x, a.body.position.y, a.body.heading,
                                        a.ekf.mean(0), a.ekf.mean(1)});
    refresh_bodies();
    beacons_fresh = false;

    // UWB slot: one ranging pair, measurement delivered to both ends.
    if (schedule && k % slot_divider == 0) {
      const std::uint64_t slot = schedule->slot();
      bool round_done = false;
      const RangingPair pair = schedule->advance(&round_done);
      auto& ini = agents[pair.initiator];
      auto& res = agents[pair.responder];
      const auto m = perform_ranging(pair, ini.body.position, res.body.position, config.channel, rng_uwb, t);
      log.append(log_record::Range{t, slot, pair.initiator, pair.responder, !m.has_value(), m ? m->range : 0.0});
      if (m && config.estimator == Estimator::ekf) {
        for (auto [self, peer] : {std::pair{&ini, &res}, std::pair{&res, &ini}}) {
          const auto it = self->beacons.find(peer->body.id);
          if (it == self->beacons.end()) continue;
          self->ekf = update_range(self->ekf, it->second.estimated_position, m->range, config.filter).state;
        }
      }
      if (round_done && config.beacon_cadence == BeaconCadence::round) broadcast(t);
    }
    if (n >= 2 && config.beacon_cadence == BeaconCadence::tick) broadcast(t);

    // ToF zones on the 20 Hz sensor clock.
    if (k % kSensorDivider == 0) {
      for (int i = 0; i < n; ++i) {
        auto& a = agents[i];
        for (Zone z : kZones) {
          const TofReading r = sample_tof(arena, bodies, i, z, config.tof, a.rng_tof, t);
          if (config.log_sensors) log.append(log_record::Tof{t, i, z, r.distance});
          if (oca_ingest_tof(a.oca, r)) {
            a.latch.set(z, ZoneSource::tof, t);
            log.append(log_record::OcaTrigger{t, i, z, ZoneSource::tof});
          }
        }
      }
    }

    // Collision CNN frames, gated by the compute model.
    if (cnn_rate > 0.0 && k > 0 && frame_clock(cnn_rate, t, dt)) {
      for (int i = 0; i < n; ++i) {
        auto& a = agents[i];
        const VisionScore s = sample_vision(arena, bodies, i, config.vision, a.rng_vision, t);
        if (config.log_sensors) log.append(log_record::Vision{t, i, s.probability});
        if (oca_ingest_vision(a.oca, s)) {
          a.latch.set(Zone::front, ZoneSource::vision, t);
          log.append(log_record::OcaTrigger{t, i, Zone::front, ZoneSource::vision});
        }
      }
    }

    if (n >= 2 && beacons_fresh) {
      for (int i = 0; i < n; ++i) {
        auto& a = agents[i];
        a.isca_now = isca_check(a.ekf.position(), a.body.heading, a.beacons, config.isca.critical_distance, t,
                                config.isca.staleness);
        for (const auto& d : a.isca_now) log.append(log_record::IscaDetect{t, i, d.peer, d.zone, d.distance});
      }
    }

    if (k % kPolicyDivider == 0) {
      for (int i = 0; i < n; ++i) {
        auto& a = agents[i];
        if (a.policy.maneuvering()) continue;
        ZoneFlags zones = a.latch.flags(t);
        for (const auto& d : a.isca_now) zones.set(d.zone, ZoneSource::isca);
        const PolicyMode before = a.policy.mode;
        a.command = policy_step(a.policy, zones, a.rng_policy, config.policy);
        if (a.policy.mode != before || a.policy.maneuvering())
          log.append(log_record::Transition{t, i, before, a.policy.mode, a.command, detail::zone_summary(zones)});
      }
    }

    if (k == ticks) break;
    const double t_next = tick_time(k + 1);

    // Motion.
    for (int i = 0; i < n; ++i) {
      auto& a = agents[i];
      const bool braking = config.brake_before_maneuver && a.policy.maneuvering() && a.body.speed > 0.0;
      const auto step = integrate(a.body, braking ? MotionCommand::stop() : a.command, dt, config.kinematics);
      const Vec2 before = a.body.position;
      a.body = step.body;
      a.body.position = detail::clip_to(arena, a.body.position);
      a.velocity = (a.body.position - before) / dt;
      if (a.policy.maneuvering() && !braking) {
        a.command = step.remaining;
        a.policy.pending = step.remaining;
        if (step.completed) {
          const PolicyMode from = a.policy.mode;
          policy_complete(a.policy);
          a.command = MotionCommand::cruise();
          a.latch.clear();
          log.append(log_record::Transition{t_next, i, from, a.policy.mode, a.command, "maneuver_complete"});
        }
      }
    }

    // Crash bookkeeping and recovery.
    refresh_bodies();
    const auto events = crashes.detect(bodies, arena, t_next);
    std::vector<std::pair<int, Collider>> recover;
    for (const auto& e : events) {
      log.append(log_record::Crash{t_next, e.agent, e.position.x, e.position.y, e.collider});
      recover.push_back({e.agent, e.collider});
      if (e.collider.kind == Collider::Kind::agent) recover.push_back({e.collider.index, Collider{Collider::Kind::agent, e.agent}});
    }
    std::vector<bool> recovered(n, false);
    for (const auto& [id, collider] : recover) {
      if (recovered[id]) continue;
      recovered[id] = true;
      auto& a = agents[id];
      const Vec2 dir = a.velocity.norm() > 1e-9 ? -a.velocity / a.velocity.norm()
                                                : detail::escape_direction(arena, agents, a, collider);
      a.body.position = detail::clip_to(arena, a.body.position + dir * kCrashSetback);
      a.body.speed = 0.0;
      const PolicyMode from = a.policy.mode;
      a.policy.mode = PolicyMode::rotate_random;
      a.policy.pending = MotionCommand::rotate(kPi);
      a.command = *a.policy.pending;
      a.latch.clear();
      log.append(log_record::Transition{t_next, id, from, a.policy.mode, a.command, "crash_recovery"});
    }

    // Ego-motion and localization.
    for (int i = 0; i < n; ++i) {
      auto& a = agents[i];
      const Vec2 accel = (a.velocity - a.prev_velocity) / dt;
      a.prev_velocity = a.velocity;
      if (config.estimator == Estimator::truth) {
        a.ekf.mean << a.body.position.x, a.body.position.y, a.velocity.x, a.velocity.y;
        a.ekf.time = t_next;
        continue;
      }
      const EgoMotionSample s = sample_ego_motion(a.body.heading, a.velocity, accel, config.ego, a.rng_ego, t_next);
      a.ekf = predict(a.ekf, s.acceleration, a.body.heading, dt, config.filter);
      a.ekf = update_flow(a.ekf, s.flow_velocity, a.body.heading, config.filter);
    }
  }

  MissionResult result{std::move(log), {}};
  result.report = compute_report(result.log);
  return result;
}

}  // namespace nanoswarm
