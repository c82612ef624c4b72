#pragma once

// Append-only run log. Records are kept typed in memory and serialized as
// one JSON object per line with an explicit "type" field.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "avoidance.hpp"
#include "config.hpp"

namespace nanoswarm {

namespace log_record {

struct Trajectory {
  double t;
  int agent;
  double x, y, heading;
  double est_x, est_y;
};

struct Tof {
  double t;
  int agent;
  Zone zone;
  double distance;
};

struct Vision {
  double t;
  int agent;
  double probability;
};

struct OcaTrigger {
  double t;
  int agent;
  Zone zone;
  ZoneSource source;
};

struct IscaDetect {
  double t;
  int agent;
  int peer;
  Zone zone;
  double distance;
};

struct Transition {
  double t;
  int agent;
  PolicyMode from;
  PolicyMode to;
  MotionCommand command;
  std::string reason;
};

struct Range {
  double t;
  std::uint64_t slot;
  int initiator;
  int responder;
  bool lost;
  double range;
};

struct Beacon {
  double t;
  int sender;
  int receiver;
  double x, y;
};

struct Crash {
  double t;
  int agent;
  double x, y;
  Collider collider;
};

}  // namespace log_record

using LogRecord = std::variant<log_record::Trajectory, log_record::Tof, log_record::Vision, log_record::OcaTrigger,
                               log_record::IscaDetect, log_record::Transition, log_record::Range, log_record::Beacon,
                               log_record::Crash>;

inline double record_time(const LogRecord& r) {
  return std::visit([](const auto& rec) { return rec.t; }, r);
}

class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(MissionConfig config) : config_(std::move(config)) {}

  const MissionConfig& config() const { return config_; }
  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  void append(LogRecord r) {
    const double t = record_time(r);
    if (!records_.empty() && t < last_time_) throw DomainError("event log timestamps must be non-decreasing");
    last_time_ = t;
    records_.push_back(std::move(r));
  }

  void write(std::ostream& out) const;
  std::string serialize() const {
    std::ostringstream s;
    write(s);
    return s.str();
  }
  static EventLog read(std::istream& in);
  static EventLog parse(const std::string& text) {
    std::istringstream s(text);
    return read(s);
  }

 private:
  MissionConfig config_;
  std::vector<LogRecord> records_;
  double last_time_ = 0.0;
};

namespace detail {

using nlohmann::json;

inline const char* command_kind(MotionCommand::Kind k) {
  switch (k) {
    case MotionCommand::Kind::cruise: return "cruise";
    case MotionCommand::Kind::stop: return "stop";
    case MotionCommand::Kind::rotate: return "rotate";
    case MotionCommand::Kind::lateral: return "lateral";
  }
  return "?";
}

inline MotionCommand::Kind command_kind_from(const std::string& s) {
  if (s == "cruise") return MotionCommand::Kind::cruise;
  if (s == "stop") return MotionCommand::Kind::stop;
  if (s == "rotate") return MotionCommand::Kind::rotate;
  if (s == "lateral") return MotionCommand::Kind::lateral;
  throw ConfigError("unknown command kind '" + s + "'");
}

inline const char* collider_kind(Collider::Kind k) {
  switch (k) {
    case Collider::Kind::obstacle: return "obstacle";
    case Collider::Kind::wall: return "wall";
    case Collider::Kind::agent: return "agent";
  }
  return "?";
}

inline Collider::Kind collider_kind_from(const std::string& s) {
  if (s == "obstacle") return Collider::Kind::obstacle;
  if (s == "wall") return Collider::Kind::wall;
  if (s == "agent") return Collider::Kind::agent;
  throw ConfigError("unknown collider kind '" + s + "'");
}

inline PolicyMode mode_from(const std::string& s) {
  for (auto m : {PolicyMode::cruise, PolicyMode::rotate_random, PolicyMode::rotate_forced_90, PolicyMode::lateral_shift,
                 PolicyMode::stopped})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown policy mode '" + s + "'");
}

inline Zone zone_from(const std::string& s) {
  const auto z = parse_zone(s);
  if (!z) throw ConfigError("unknown zone '" + s + "'");
  return *z;
}

inline const char* source_name(ZoneSource s) {
  switch (s) {
    case ZoneSource::tof: return "tof";
    case ZoneSource::vision: return "vision";
    case ZoneSource::isca: return "isca";
    default: return "none";
  }
}

inline ZoneSource source_from(const std::string& s) {
  if (s == "tof") return ZoneSource::tof;
  if (s == "vision") return ZoneSource::vision;
  if (s == "isca") return ZoneSource::isca;
  return ZoneSource::none;
}

struct ToJson {
  json operator()(const log_record::Trajectory& r) const {
    return {{"type", "traj"}, {"t", r.t}, {"agent", r.agent}, {"x", r.x}, {"y", r.y},
            {"heading", r.heading}, {"est_x", r.est_x}, {"est_y", r.est_y}};
  }
  json operator()(const log_record::Tof& r) const {
    return {{"type", "tof"}, {"t", r.t}, {"agent", r.agent}, {"zone", to_string(r.zone)}, {"d", r.distance}};
  }
  json operator()(const log_record::Vision& r) const {
    return {{"type", "vision"}, {"t", r.t}, {"agent", r.agent}, {"p", r.probability}};
  }
  json operator()(const log_record::OcaTrigger& r) const {
    return {{"type", "oca"}, {"t", r.t}, {"agent", r.agent}, {"zone", to_string(r.zone)},
            {"source", source_name(r.source)}};
  }
  json operator()(const log_record::IscaDetect& r) const {
    return {{"type", "isca"}, {"t", r.t}, {"agent", r.agent}, {"peer", r.peer}, {"zone", to_string(r.zone)},
            {"d", r.distance}};
  }
  json operator()(const log_record::Transition& r) const {
    return {{"type", "fsm"}, {"t", r.t}, {"agent", r.agent}, {"from", to_string(r.from)}, {"to", to_string(r.to)},
            {"cmd", command_kind(r.command.kind)}, {"delta", r.command.delta},
            {"side", r.command.side == Side::left ? "left" : "right"}, {"dist", r.command.distance},
            {"reason", r.reason}};
  }
  json operator()(const log_record::Range& r) const {
    json j = {{"type", "range"}, {"t", r.t}, {"slot", r.slot}, {"initiator", r.initiator},
              {"responder", r.responder}, {"lost", r.lost}};
    if (!r.lost) j["range"] = r.range;
    return j;
  }
  json operator()(const log_record::Beacon& r) const {
    return {{"type", "beacon"}, {"t", r.t}, {"sender", r.sender}, {"receiver", r.receiver}, {"x", r.x}, {"y", r.y}};
  }
  json operator()(const log_record::Crash& r) const {
    return {{"type", "crash"}, {"t", r.t}, {"agent", r.agent}, {"x", r.x}, {"y", r.y},
            {"collider", collider_kind(r.collider.kind)}, {"index", r.collider.index}};
  }
};

inline LogRecord from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  const double t = j.at("t").get<double>();
  if (type == "traj")
    return log_record::Trajectory{t, j.at("agent").get<int>(), j.at("x").get<double>(), j.at("y").get<double>(),
                                  j.at("heading").get<double>(), j.at("est_x").get<double>(),
                                  j.at("est_y").get<double>()};
  if (type == "tof")
    return log_record::Tof{t, j.at("agent").get<int>(), zone_from(j.at("zone")), j.at("d").get<double>()};
  if (type == "vision") return log_record::Vision{t, j.at("agent").get<int>(), j.at("p").get<double>()};
  if (type == "oca")
    return log_record::OcaTrigger{t, j.at("agent").get<int>(), zone_from(j.at("zone")), source_from(j.at("source"))};
  if (type == "isca")
    return log_record::IscaDetect{t, j.at("agent").get<int>(), j.at("peer").get<int>(), zone_from(j.at("zone")),
                                  j.at("d").get<double>()};
  if (type == "fsm") {
    MotionCommand c;
    c.kind = command_kind_from(j.at("cmd"));
    c.delta = j.at("delta").get<double>();
    c.side = j.at("side").get<std::string>() == "left" ? Side::left : Side::right;
    c.distance = j.at("dist").get<double>();
    return log_record::Transition{t, j.at("agent").get<int>(), mode_from(j.at("from")), mode_from(j.at("to")), c,
                                  j.at("reason").get<std::string>()};
  }
  if (type == "range") {
    const bool lost = j.at("lost").get<bool>();
    return log_record::Range{t, j.at("slot").get<std::uint64_t>(), j.at("initiator").get<int>(),
                             j.at("responder").get<int>(), lost, lost ? 0.0 : j.at("range").get<double>()};
  }
  if (type == "beacon")
    return log_record::Beacon{t, j.at("sender").get<int>(), j.at("receiver").get<int>(), j.at("x").get<double>(),
                              j.at("y").get<double>()};
  if (type == "crash")
    return log_record::Crash{t, j.at("agent").get<int>(), j.at("x").get<double>(), j.at("y").get<double>(),
                             Collider{collider_kind_from(j.at("collider")), j.at("index").get<int>()}};
  throw ConfigError("unknown log record type '" + type + "'");
}

}  // namespace detail

inline std::string record_to_json_line(const LogRecord& r) { return std::visit(detail::ToJson{}, r).dump(); }

inline void EventLog::write(std::ostream& out) const {
  detail::json header = {{"type", "header"}, {"format_version", kFormatVersion}};
  detail::json cfg = detail::json::array();
  for (const auto& [k, v] : to_key_values(config_)) cfg.push_back({k, v});
  header["config"] = cfg;
  out << header.dump() << '\n';
  for (const auto& r : records_) out << record_to_json_line(r) << '\n';
}

inline EventLog EventLog::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty event log");
  detail::json header;
  try {
    header = detail::json::parse(line);
  } catch (const detail::json::exception& e) {
    throw ConfigError(std::string("malformed log header: ") + e.what());
  }
  if (header.value("type", "") != "header") throw ConfigError("event log must start with a header record");
  if (header.value("format_version", 0) != kFormatVersion) throw ConfigError("unsupported event log format_version");
  MissionConfig cfg;
  for (const auto& kv : header.at("config")) {
    apply_setting(cfg, kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
  }
  EventLog log(std::move(cfg));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      log.append(detail::from_json(detail::json::parse(line)));
    } catch (const detail::json::exception& e) {
      throw ConfigError("log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace nanoswarm
