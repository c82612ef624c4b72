#pragma once

// Mission configuration: typed parameters plus the line-oriented
// `key = value` text format used for config files and log headers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agents.hpp"
#include "avoidance.hpp"
#include "compute.hpp"
#include "localization.hpp"
#include "sensing.hpp"
#include "uwb.hpp"
#include "world.hpp"

namespace nanoswarm {

inline constexpr int kFormatVersion = 1;
inline constexpr int kTicksPerSecond = 100;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class SensingMode { tof_only, tof_and_vision };
enum class Estimator { ekf, truth };
enum class BeaconCadence { round, tick };

inline std::string_view to_string(SensingMode m) { return m == SensingMode::tof_only ? "tof_only" : "tof_and_vision"; }
inline std::string_view to_string(Estimator e) { return e == Estimator::ekf ? "ekf" : "truth"; }
inline std::string_view to_string(BeaconCadence c) { return c == BeaconCadence::round ? "round" : "tick"; }

inline std::optional<SensingMode> parse_sensing_mode(std::string_view s) {
  if (s == "tof_only") return SensingMode::tof_only;
  if (s == "tof_and_vision") return SensingMode::tof_and_vision;
  return std::nullopt;
}

struct MissionConfig {
  // arena.preset is either a preset name or "custom", in which case the
  // arena is described field by field.
  std::string arena_preset = "obstacle_free";
  std::uint64_t arena_seed = 0;
  Arena custom_arena;

  int swarm_size = 1;
  double duration = 240.0;
  std::uint64_t seed = 1;
  SensingMode mode = SensingMode::tof_only;
  std::optional<double> takeoff_heading;  // rad; drawn from the seed when unset

  KinematicLimits kinematics;
  bool brake_before_maneuver = true;  // stop forward motion before rotating or shifting
  TofParams tof;
  EgoMotionParams ego;
  VisionProxyParams vision;
  UwbChannelParams channel;
  double uwb_slot_period = 0.05;
  BeaconCadence beacon_cadence = BeaconCadence::round;
  std::string compute_profile = "field_5hz";
  PolicyParams policy;
  IscaParams isca;
  double latch_hold = 0.3;
  Estimator estimator = Estimator::ekf;
  NoiseConfig filter;
  bool log_sensors = true;

  Arena arena() const {
    if (arena_preset == "custom") {
      validate(custom_arena);
      return custom_arena;
    }
    return build_preset(arena_preset, arena_seed);
  }

  ScheduleModel compute_model() const {
    auto m = compute_profiles::by_name(compute_profile);
    if (!m) throw ConfigError("unknown compute profile '" + compute_profile + "'");
    return *m;
  }

  // Throws ConfigError for any value a run cannot start with.
  void validate_or_throw() const {
    try {
      const Arena a = arena();
      if (swarm_size < 1) throw ConfigError("swarm.size must be at least 1");
      if (static_cast<std::size_t>(swarm_size) > a.takeoff.size())
        throw ConfigError("arena '" + a.name + "' has only " + std::to_string(a.takeoff.size()) +
                          " take-off positions");
      if (!(duration > 0.0)) throw ConfigError("mission.duration_s must be positive");
      if (!(uwb_slot_period * kTicksPerSecond >= 1.0 - 1e-9) ||
          std::abs(uwb_slot_period * kTicksPerSecond - std::round(uwb_slot_period * kTicksPerSecond)) > 1e-6)
        throw ConfigError("uwb.slot_period_s must be a positive multiple of the 0.01 s tick");
      vision.validate();
      channel.validate();
      filter.validate();
      compute_model().validate();
      if (!(tof.sigma >= 0.0) || !(tof.jitter >= 0.0)) throw ConfigError("ToF noise must be non-negative");
      if (!(ego.flow_sigma >= 0.0) || !(ego.accel_sigma >= 0.0))
        throw ConfigError("ego-motion noise must be non-negative");
      if (!(kinematics.max_speed > 0.0) || !(kinematics.acceleration > 0.0) || !(kinematics.yaw_rate > 0.0) ||
          !(kinematics.footprint_radius > 0.0))
        throw ConfigError("agent kinematic limits must be positive");
      if (!(policy.lateral_shift > 0.0)) throw ConfigError("policy.lateral_shift_m must be positive");
      if (!(isca.critical_distance > 0.0)) throw ConfigError("policy.critical_distance_m must be positive");
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Degree values pass through a radian conversion; twelve significant digits
// keep text -> config -> text stable.
inline std::string format_degrees(double rad) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", rad_to_deg(rad));
  return buf;
}

inline double parse_double(std::string_view key, std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("key '" + std::string(key) + "': expected an unsigned integer, got '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false");
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const MissionConfig&)> get;
  std::function<void(MissionConfig&, std::string_view)> set;
};

inline Field real(std::string key, double MissionConfig::*outer) {
  return {key, [outer](const MissionConfig& c) { return format_double(c.*outer); },
          [outer, key](MissionConfig& c, std::string_view v) { c.*outer = parse_double(key, v); }};
}

template <typename S>
Field real(std::string key, S MissionConfig::*outer, double S::*inner) {
  return {key, [outer, inner](const MissionConfig& c) { return format_double(c.*outer.*inner); },
          [outer, inner, key](MissionConfig& c, std::string_view v) { c.*outer.*inner = parse_double(key, v); }};
}

// Angles stored in radians but written in degrees.
template <typename S>
Field degrees(std::string key, S MissionConfig::*outer, double S::*inner) {
  return {key, [outer, inner](const MissionConfig& c) { return format_degrees(c.*outer.*inner); },
          [outer, inner, key](MissionConfig& c, std::string_view v) {
            c.*outer.*inner = deg_to_rad(parse_double(key, v));
          }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"arena.preset", [](const MissionConfig& c) { return c.arena_preset; },
                 [](MissionConfig& c, std::string_view v) {
                   if (v != "custom" && !parse_preset(v)) throw ConfigError("unknown arena preset '" + std::string(v) + "'");
                   c.arena_preset = std::string(v);
                 }});
    f.push_back({"arena.seed", [](const MissionConfig& c) { return std::to_string(c.arena_seed); },
                 [](MissionConfig& c, std::string_view v) { c.arena_seed = parse_u64("arena.seed", v); }});
    f.push_back({"swarm.size", [](const MissionConfig& c) { return std::to_string(c.swarm_size); },
                 [](MissionConfig& c, std::string_view v) {
                   c.swarm_size = static_cast<int>(parse_u64("swarm.size", v));
                 }});
    f.push_back(real("mission.duration_s", &MissionConfig::duration));
    f.push_back({"mission.seed", [](const MissionConfig& c) { return std::to_string(c.seed); },
                 [](MissionConfig& c, std::string_view v) { c.seed = parse_u64("mission.seed", v); }});
    f.push_back({"mission.takeoff_heading_deg",
                 [](const MissionConfig& c) {
                   return c.takeoff_heading ? format_degrees(*c.takeoff_heading) : std::string("random");
                 },
                 [](MissionConfig& c, std::string_view v) {
                   if (v == "random") c.takeoff_heading.reset();
                   else c.takeoff_heading = deg_to_rad(parse_double("mission.takeoff_heading_deg", v));
                 }});
    f.push_back({"policy.mode", [](const MissionConfig& c) { return std::string(to_string(c.mode)); },
                 [](MissionConfig& c, std::string_view v) {
                   const auto m = parse_sensing_mode(v);
                   if (!m) throw ConfigError("policy.mode must be tof_only or tof_and_vision");
                   c.mode = *m;
                 }});
    f.push_back(real("agent.max_speed_mps", &MissionConfig::kinematics, &KinematicLimits::max_speed));
    f.push_back(real("agent.accel_mps2", &MissionConfig::kinematics, &KinematicLimits::acceleration));
    f.push_back(degrees("agent.yaw_rate_dps", &MissionConfig::kinematics, &KinematicLimits::yaw_rate));
    f.push_back(real("agent.footprint_m", &MissionConfig::kinematics, &KinematicLimits::footprint_radius));
    f.push_back({"agent.brake_before_maneuver",
                 [](const MissionConfig& c) { return std::string(c.brake_before_maneuver ? "true" : "false"); },
                 [](MissionConfig& c, std::string_view v) {
                   c.brake_before_maneuver = parse_bool("agent.brake_before_maneuver", v);
                 }});
    f.push_back(real("sensors.tof.sigma_m", &MissionConfig::tof, &TofParams::sigma));
    f.push_back(degrees("sensors.tof.jitter_deg", &MissionConfig::tof, &TofParams::jitter));
    f.push_back(real("sensors.flow.sigma_mps", &MissionConfig::ego, &EgoMotionParams::flow_sigma));
    f.push_back(real("sensors.accel.sigma_mps2", &MissionConfig::ego, &EgoMotionParams::accel_sigma));
    f.push_back(real("vision.fov_rad", &MissionConfig::vision, &VisionProxyParams::fov));
    f.push_back(real("vision.d0_m", &MissionConfig::vision, &VisionProxyParams::d0));
    f.push_back(real("vision.slope_m", &MissionConfig::vision, &VisionProxyParams::slope));
    f.push_back(real("vision.noise_sigma", &MissionConfig::vision, &VisionProxyParams::noise_sigma));
    f.push_back(real("vision.floor", &MissionConfig::vision, &VisionProxyParams::false_positive_floor));
    f.push_back(real("uwb.range_sigma_m", &MissionConfig::channel, &UwbChannelParams::range_noise_sigma));
    f.push_back(real("uwb.loss_probability", &MissionConfig::channel, &UwbChannelParams::loss_probability));
    f.push_back(real("uwb.slot_period_s", &MissionConfig::uwb_slot_period));
    f.push_back({"uwb.beacon_cadence", [](const MissionConfig& c) { return std::string(to_string(c.beacon_cadence)); },
                 [](MissionConfig& c, std::string_view v) {
                   if (v == "round") c.beacon_cadence = BeaconCadence::round;
                   else if (v == "tick") c.beacon_cadence = BeaconCadence::tick;
                   else throw ConfigError("uwb.beacon_cadence must be round or tick");
                 }});
    f.push_back({"compute.profile", [](const MissionConfig& c) { return c.compute_profile; },
                 [](MissionConfig& c, std::string_view v) {
                   if (!compute_profiles::by_name(v)) throw ConfigError("unknown compute profile '" + std::string(v) + "'");
                   c.compute_profile = std::string(v);
                 }});
    f.push_back(real("policy.critical_distance_m", &MissionConfig::isca, &IscaParams::critical_distance));
    f.push_back(real("policy.beacon_staleness_s", &MissionConfig::isca, &IscaParams::staleness));
    f.push_back(real("policy.lateral_shift_m", &MissionConfig::policy, &PolicyParams::lateral_shift));
    f.push_back(degrees("policy.forced_rotation_deg", &MissionConfig::policy, &PolicyParams::forced_rotation));
    f.push_back(real("policy.latch_hold_s", &MissionConfig::latch_hold));
    f.push_back({"localization.estimator", [](const MissionConfig& c) { return std::string(to_string(c.estimator)); },
                 [](MissionConfig& c, std::string_view v) {
                   if (v == "ekf") c.estimator = Estimator::ekf;
                   else if (v == "truth") c.estimator = Estimator::truth;
                   else throw ConfigError("localization.estimator must be ekf or truth");
                 }});
    f.push_back(real("localization.process_accel_sigma", &MissionConfig::filter, &NoiseConfig::process_accel_sigma));
    f.push_back(real("localization.flow_meas_sigma", &MissionConfig::filter, &NoiseConfig::flow_meas_sigma));
    f.push_back(real("localization.range_meas_sigma", &MissionConfig::filter, &NoiseConfig::range_meas_sigma));
    f.push_back({"log.sensors", [](const MissionConfig& c) { return std::string(c.log_sensors ? "true" : "false"); },
                 [](MissionConfig& c, std::string_view v) { c.log_sensors = parse_bool("log.sensors", v); }});
    return f;
  }();
  return table;
}

inline std::string obstacle_to_text(const ObstacleShape& o) {
  if (o.is_disc()) {
    const Disc& d = o.as_disc();
    return "disc " + format_double(d.center.x) + " " + format_double(d.center.y) + " " + format_double(d.radius) +
           (o.thin ? " thin" : "");
  }
  const Segment& s = o.as_segment();
  return "segment " + format_double(s.p1.x) + " " + format_double(s.p1.y) + " " + format_double(s.p2.x) + " " +
         format_double(s.p2.y);
}

inline ObstacleShape obstacle_from_text(std::string_view key, std::string_view text) {
  const auto tok = split_ws(text);
  if (!tok.empty() && tok[0] == "disc" && (tok.size() == 4 || (tok.size() == 5 && tok[4] == "thin")))
    return ObstacleShape::disc({parse_double(key, tok[1]), parse_double(key, tok[2])}, parse_double(key, tok[3]),
                               tok.size() == 5);
  if (!tok.empty() && tok[0] == "segment" && tok.size() == 5)
    return ObstacleShape::segment({parse_double(key, tok[1]), parse_double(key, tok[2])},
                                  {parse_double(key, tok[3]), parse_double(key, tok[4])});
  throw ConfigError("key '" + std::string(key) + "': expected 'disc x y r [thin]' or 'segment x1 y1 x2 y2'");
}

}  // namespace detail

// Ordered key/value view of a config. Custom arenas add arena.* geometry keys.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const MissionConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("format_version", std::to_string(kFormatVersion));
  for (const auto& f : detail::fields()) {
    kv.emplace_back(f.key, f.get(c));
    if (f.key == "arena.seed" && c.arena_preset == "custom") {
      const Arena& a = c.custom_arena;
      kv.emplace_back("arena.name", a.name);
      kv.emplace_back("arena.width_m", detail::format_double(a.width));
      kv.emplace_back("arena.height_m", detail::format_double(a.height));
      for (std::size_t i = 0; i < a.obstacles.size(); ++i)
        kv.emplace_back("arena.obstacle." + std::to_string(i), detail::obstacle_to_text(a.obstacles[i]));
      for (std::size_t i = 0; i < a.takeoff.size(); ++i)
        kv.emplace_back("arena.takeoff." + std::to_string(i),
                        detail::format_double(a.takeoff[i].x) + " " + detail::format_double(a.takeoff[i].y));
    }
  }
  return kv;
}

inline std::string to_text(const MissionConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_key_values(c)) out += k + " = " + v + "\n";
  return out;
}

inline void apply_setting(MissionConfig& c, std::string_view key, std::string_view value) {
  if (key == "format_version") {
    if (detail::parse_u64(key, value) != static_cast<std::uint64_t>(kFormatVersion))
      throw ConfigError("unsupported format_version " + std::string(value));
    return;
  }
  for (const auto& f : detail::fields())
    if (f.key == key) {
      f.set(c, value);
      return;
    }
  Arena& a = c.custom_arena;
  auto indexed = [&](std::string_view prefix) -> std::optional<std::size_t> {
    if (key.substr(0, prefix.size()) != prefix) return std::nullopt;
    return detail::parse_u64(key, key.substr(prefix.size()));
  };
  if (key == "arena.name") { a.name = std::string(value); return; }
  if (key == "arena.width_m") { a.width = detail::parse_double(key, value); return; }
  if (key == "arena.height_m") { a.height = detail::parse_double(key, value); return; }
  if (auto i = indexed("arena.obstacle.")) {
    if (*i != a.obstacles.size()) throw ConfigError("arena obstacles must be listed in order");
    a.obstacles.push_back(detail::obstacle_from_text(key, value));
    return;
  }
  if (auto i = indexed("arena.takeoff.")) {
    if (*i != a.takeoff.size()) throw ConfigError("arena take-off positions must be listed in order");
    const auto tok = detail::split_ws(value);
    if (tok.size() != 2) throw ConfigError("key '" + std::string(key) + "': expected 'x y'");
    a.takeoff.push_back({detail::parse_double(key, tok[0]), detail::parse_double(key, tok[1])});
    return;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

inline MissionConfig parse_config(std::string_view text, MissionConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line = detail::trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return base;
}

// Embeds an arena as a custom description so it round-trips through text.
inline MissionConfig with_custom_arena(MissionConfig c, const Arena& arena) {
  c.arena_preset = "custom";
  c.custom_arena = arena;
  return c;
}

inline long long slot_ticks(const MissionConfig& c) { return std::llround(c.uwb_slot_period * kTicksPerSecond); }

// ISCA re-evaluates whenever fresh beacons arrive and holds its output
// until the next broadcast.
inline long long isca_period_ticks(const MissionConfig& c) {
  if (c.beacon_cadence == BeaconCadence::tick) return 1;
  return std::max(1, c.swarm_size - 1) * slot_ticks(c);
}

inline std::uint64_t config_hash(const MissionConfig& c) { return hash_tag(to_text(c)); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace nanoswarm
