#pragma once

// Obstacle collision avoidance (debounced ToF and vision triggers),
// intra-swarm proximity detection, and the exploration policy state machine.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "agents.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "uwb.hpp"

namespace nanoswarm {

enum class ZoneSource : std::uint8_t { none = 0, tof = 1, vision = 2, isca = 4 };

inline std::uint8_t operator|(std::uint8_t a, ZoneSource b) { return a | static_cast<std::uint8_t>(b); }

struct ZoneFlags {
  std::array<bool, 4> occupied{};
  std::array<std::uint8_t, 4> sources{};  // ZoneSource bitmask per zone

  bool operator[](Zone z) const { return occupied[static_cast<int>(z)]; }
  bool any() const { return occupied[0] || occupied[1] || occupied[2] || occupied[3]; }

  void set(Zone z, ZoneSource src) {
    if (src == ZoneSource::vision && z != Zone::front)
      throw DomainError("vision may only flag the front zone");
    occupied[static_cast<int>(z)] = true;
    sources[static_cast<int>(z)] = sources[static_cast<int>(z)] | src;
  }

  void merge(const ZoneFlags& o) {
    for (int i = 0; i < 4; ++i) {
      occupied[i] = occupied[i] || o.occupied[i];
      sources[i] |= o.sources[i];
    }
  }

  static ZoneFlags from_bits(unsigned bits) {
    ZoneFlags f;
    for (int i = 0; i < 4; ++i) f.occupied[i] = (bits >> i) & 1u;
    return f;
  }

  bool operator==(const ZoneFlags&) const = default;
};

struct OcaState {
  std::array<int, 4> tof_consecutive_below{};
  int vision_consecutive_above = 0;
  double tof_threshold = 1.0;
  int tof_trigger_count = 5;
  double vision_threshold = 0.7;
  int vision_trigger_count = 2;
};

// Debounce on one ToF zone: fires when the zone has collected
// tof_trigger_count consecutive readings under the threshold.
inline std::optional<Zone> oca_ingest_tof(OcaState& state, const TofReading& reading) {
  int& counter = state.tof_consecutive_below[static_cast<int>(reading.zone)];
  if (reading.distance < state.tof_threshold) {
    if (++counter >= state.tof_trigger_count) {
      counter = 0;
      return reading.zone;
    }
  } else {
    counter = 0;
  }
  return std::nullopt;
}

// Front-zone debounce on the collision score; the threshold is exclusive.
inline bool oca_ingest_vision(OcaState& state, const VisionScore& score) {
  int& counter = state.vision_consecutive_above;
  if (score.probability > state.vision_threshold) {
    if (++counter >= state.vision_trigger_count) {
      counter = 0;
      return true;
    }
  } else {
    counter = 0;
  }
  return false;
}

// OCA triggers are latched until the maneuver they cause completes. A latch
// that does not start a maneuver (a lone back trigger) expires after `hold`.
class ZoneLatch {
 public:
  explicit ZoneLatch(double hold = 0.3) : hold_(hold) {}

  void set(Zone z, ZoneSource src, double time) {
    auto& e = entries_[static_cast<int>(z)];
    e.active = true;
    e.sources = e.sources | src;
    e.time = time;
  }

  ZoneFlags flags(double now) {
    ZoneFlags f;
    for (int i = 0; i < 4; ++i) {
      auto& e = entries_[i];
      if (e.active && now - e.time > hold_ + 1e-9) e = {};
      if (e.active) {
        f.occupied[i] = true;
        f.sources[i] = e.sources;
      }
    }
    return f;
  }

  void clear() { entries_ = {}; }

 private:
  struct Entry {
    bool active = false;
    std::uint8_t sources = 0;
    double time = 0.0;
  };
  std::array<Entry, 4> entries_{};
  double hold_;
};

// Quadrant of a body-frame bearing: front (-45, 45], left (45, 135],
// right (-135, -45], back otherwise.
inline Zone classify_bearing(double bearing) {
  const double b = normalize_angle(bearing);
  const double q = kPi / 4.0;
  if (b > -q && b <= q) return Zone::front;
  if (b > q && b <= 3.0 * q) return Zone::left;
  if (b > -3.0 * q && b <= -q) return Zone::right;
  return Zone::back;
}

struct IscaDetection {
  int peer = 0;
  Zone zone = Zone::front;
  double distance = 0.0;
  bool operator==(const IscaDetection&) const = default;
};

struct IscaParams {
  double critical_distance = 0.65;
  double staleness = 0.5;  // s; older beacons are ignored
};

inline std::vector<IscaDetection> isca_check(Vec2 own_estimate, double own_heading, const BeaconTable& beacons,
                                             double critical_distance, double now = 0.0,
                                             double staleness = std::numeric_limits<double>::infinity()) {
  std::vector<IscaDetection> out;
  for (const auto& [peer, beacon] : beacons) {
    if (now - beacon.time > staleness) continue;
    const Vec2 rel = beacon.estimated_position - own_estimate;
    const double d = rel.norm();
    if (d < critical_distance) {
      const double bearing = std::atan2(rel.y, rel.x) - own_heading;
      out.push_back({peer, classify_bearing(bearing), d});
    }
  }
  return out;
}

enum class PolicyMode { cruise, rotate_random, rotate_forced_90, lateral_shift, stopped };

inline std::string_view to_string(PolicyMode m) {
  switch (m) {
    case PolicyMode::cruise: return "CRUISE";
    case PolicyMode::rotate_random: return "ROTATE_RANDOM";
    case PolicyMode::rotate_forced_90: return "ROTATE_FORCED_90";
    case PolicyMode::lateral_shift: return "LATERAL_SHIFT";
    case PolicyMode::stopped: return "STOPPED";
  }
  return "?";
}

struct PolicyParams {
  double min_rotation = deg_to_rad(90.0);
  double max_rotation = deg_to_rad(270.0);
  double forced_rotation = deg_to_rad(90.0);
  double lateral_shift = 0.3;
};

struct PolicyState {
  PolicyMode mode = PolicyMode::stopped;
  std::optional<MotionCommand> pending;  // in-progress maneuver

  bool maneuvering() const { return pending.has_value(); }
};

// One evaluation of the exploration policy. While a maneuver is in progress
// the pending command is returned unchanged.
inline MotionCommand policy_step(PolicyState& policy, const ZoneFlags& zones, Rng& rng,
                                 const PolicyParams& params = {}) {
  if (policy.pending) return *policy.pending;
  const bool front = zones[Zone::front];
  const bool back = zones[Zone::back];
  const bool left = zones[Zone::left];
  const bool right = zones[Zone::right];
  if (front && back) {
    policy.mode = PolicyMode::rotate_forced_90;
    policy.pending = MotionCommand::rotate(params.forced_rotation);
  } else if (front || (left && right)) {
    const double magnitude = params.min_rotation + (params.max_rotation - params.min_rotation) * rng.uniform();
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    policy.mode = PolicyMode::rotate_random;
    policy.pending = MotionCommand::rotate(sign * magnitude);
  } else if (left) {
    policy.mode = PolicyMode::lateral_shift;
    policy.pending = MotionCommand::lateral(Side::right, params.lateral_shift);
  } else if (right) {
    policy.mode = PolicyMode::lateral_shift;
    policy.pending = MotionCommand::lateral(Side::left, params.lateral_shift);
  } else {
    policy.mode = PolicyMode::cruise;
    return MotionCommand::cruise();
  }
  return *policy.pending;
}

// Called by the run loop when the pending maneuver finishes.
inline void policy_complete(PolicyState& policy) {
  policy.pending.reset();
  policy.mode = PolicyMode::cruise;
}

}  // namespace nanoswarm
