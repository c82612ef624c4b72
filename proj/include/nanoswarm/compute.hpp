#pragma once

// Shared visual-processing engine: tasks run round-robin, once each per
// cycle, so every task's frame rate is 1 / cycle time.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"

namespace nanoswarm {

struct ComputeTaskSpec {
  std::string name;
  double latency = 0.0;  // s per execution
  // Carried into reports, never simulated.
  double parameters_mb = 0.0;
  double memory_kb = 0.0;
  double power_mw = 0.0;
};

struct ScheduleModel {
  std::string name;
  std::vector<ComputeTaskSpec> tasks;
  double overhead = 0.0;  // s per cycle (capture, compression, logging)

  double cycle_time() const {
    double t = overhead;
    for (const auto& task : tasks) t += task.latency;
    return t;
  }

  const ComputeTaskSpec* find(std::string_view task) const {
    for (const auto& t : tasks)
      if (t.name == task) return &t;
    return nullptr;
  }

  void validate() const {
    for (const auto& t : tasks)
      if (!(t.latency > 0.0)) throw DomainError("task '" + t.name + "' latency must be positive");
    if (!(overhead >= 0.0)) throw DomainError("compute overhead must be non-negative");
  }
};

inline constexpr std::string_view kCollisionTask = "pulp_dronet";
inline constexpr std::string_view kDetectionTask = "ssd_mbv2";

inline double effective_rate(const ScheduleModel& model, std::string_view task) {
  if (!model.find(task)) throw DomainError("unknown compute task '" + std::string(task) + "'");
  return 1.0 / model.cycle_time();
}

// Rate of the collision CNN, zero when the profile does not schedule it.
inline double collision_cnn_rate(const ScheduleModel& model) {
  return model.find(kCollisionTask) ? effective_rate(model, kCollisionTask) : 0.0;
}

namespace compute_profiles {

inline ComputeTaskSpec ssd() { return {std::string(kDetectionTask), 0.5892, 4.67, 250.0, 134.0}; }
inline ComputeTaskSpec dronet() { return {std::string(kCollisionTask), 0.0159, 0.0832, 200.4, 100.9}; }

// Object detection interleaved with the collision CNN on the shared engine.
inline ScheduleModel interleaved() { return {"interleaved", {ssd(), dronet()}, 0.020}; }
inline ScheduleModel dronet_peak() { return {"dronet_peak", {dronet()}, 0.0}; }
inline ScheduleModel detection_only() { return {"detection_only", {ssd()}, 0.0}; }
// Collision CNN alone with capture/compression/logging overhead: 5 Hz.
inline ScheduleModel field_5hz() { return {"field_5hz", {dronet()}, 0.2 - 0.0159}; }
inline ScheduleModel none() { return {"none", {}, 0.0}; }

inline std::optional<ScheduleModel> by_name(std::string_view name) {
  for (auto m : {interleaved(), dronet_peak(), detection_only(), field_5hz(), none()})
    if (m.name == name) return m;
  return std::nullopt;
}

inline std::vector<std::string> names() {
  return {"interleaved", "dronet_peak", "detection_only", "field_5hz", "none"};
}

}  // namespace compute_profiles

// Number of frame slots granted over (0, t] at the given rate. The small
// bias keeps exact multiples such as 20 ticks * 0.01 s * 5 Hz on the grant.
inline long long frames_granted_by(double rate, double t) {
  if (rate <= 0.0 || t <= 0.0) return 0;
  return static_cast<long long>(std::floor(t * rate + 1e-9));
}

// True when sim_time crosses a multiple of 1/rate since the previous tick.
inline bool frame_clock(double rate, double sim_time, double tick) {
  return frames_granted_by(rate, sim_time) > frames_granted_by(rate, sim_time - tick);
}

inline bool frame_clock(const ScheduleModel& model, std::string_view task, double sim_time, double tick) {
  if (!model.find(task)) return false;
  return frame_clock(effective_rate(model, task), sim_time, tick);
}

}  // namespace nanoswarm
