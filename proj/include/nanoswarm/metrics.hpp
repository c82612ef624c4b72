#pragma once

// Mission metrics computed purely from an event log, so a stored log always
// reproduces its report.

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "event_log.hpp"
#include "world.hpp"

namespace nanoswarm {

struct IscaScore {
  int true_positive = 0;   // ground-truth events overlapped by a detection
  int false_positive = 0;  // detection events overlapping no ground-truth event
  int false_negative = 0;  // ground-truth events with no overlapping detection
  double precision = 1.0;
  double recall = 1.0;

  void finalize() {
    precision = true_positive + false_positive == 0
                    ? 1.0
                    : static_cast<double>(true_positive) / (true_positive + false_positive);
    recall = true_positive + false_negative == 0
                 ? 1.0
                 : static_cast<double>(true_positive) / (true_positive + false_negative);
  }

  IscaScore& operator+=(const IscaScore& o) {
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    finalize();
    return *this;
  }

  bool operator==(const IscaScore&) const = default;
};

struct MissionReport {
  bool crash_free = true;
  int crashes = 0;
  double crashes_per_minute = 0.0;   // per agent-minute
  double coverage_fraction = 0.0;    // union of visited 5 cm cells
  double coverage_per_minute = 0.0;  // percent of cells per minute
  std::size_t visited_cells = 0;
  std::size_t total_cells = 0;
  IscaScore isca;
  std::string config_hash;

  bool operator==(const MissionReport&) const = default;
};

// Closed tick-index intervals [first, last].
using Interval = std::pair<long long, long long>;
using PairTicks = std::map<std::pair<int, int>, std::vector<long long>>;

namespace detail {

inline std::vector<Interval> merge_ticks(std::vector<long long> ticks) {
  std::sort(ticks.begin(), ticks.end());
  std::vector<Interval> out;
  for (long long k : ticks) {
    if (!out.empty() && k <= out.back().second + 1) out.back().second = std::max(out.back().second, k);
    else out.push_back({k, k});
  }
  return out;
}

inline bool overlaps(const Interval& a, const Interval& b) { return a.first <= b.second && b.first <= a.second; }

}  // namespace detail

// Event-level ISCA scoring per unordered pair. Ground truth: maximal runs of
// ticks with true distance under the critical distance. Detections: maximal
// runs of ticks on which either agent flagged the other.
inline IscaScore score_isca(const PairTicks& truth_ticks, const PairTicks& detection_ticks) {
  IscaScore s;
  std::map<std::pair<int, int>, int> seen;
  for (const auto& [k, v] : truth_ticks) seen[k] = 0;
  for (const auto& [k, v] : detection_ticks) seen[k] = 0;
  for (const auto& [pair, unused] : seen) {
    const auto t_it = truth_ticks.find(pair);
    const auto d_it = detection_ticks.find(pair);
    const auto truth = t_it == truth_ticks.end() ? std::vector<Interval>{} : detail::merge_ticks(t_it->second);
    const auto det = d_it == detection_ticks.end() ? std::vector<Interval>{} : detail::merge_ticks(d_it->second);
    for (const auto& g : truth) {
      const bool hit = std::any_of(det.begin(), det.end(), [&](const Interval& d) { return detail::overlaps(g, d); });
      hit ? ++s.true_positive : ++s.false_negative;
    }
    for (const auto& d : det) {
      const bool hit = std::any_of(truth.begin(), truth.end(), [&](const Interval& g) { return detail::overlaps(g, d); });
      if (!hit) ++s.false_positive;
    }
  }
  s.finalize();
  return s;
}

inline long long tick_index(double t) { return std::llround(t * kTicksPerSecond); }

inline MissionReport compute_report(const EventLog& log) {
  const MissionConfig& cfg = log.config();
  const Arena arena = cfg.arena();
  MissionReport rep;
  CoverageGrid grid(arena);
  std::map<long long, std::vector<std::pair<int, Vec2>>> positions_by_tick;
  PairTicks detections;
  const long long hold = isca_period_ticks(cfg);
  const bool swarm = cfg.swarm_size > 1;

  for (const auto& rec : log.records()) {
    if (const auto* tr = std::get_if<log_record::Trajectory>(&rec)) {
      grid.mark_visited({tr->x, tr->y});
      if (swarm) positions_by_tick[tick_index(tr->t)].push_back({tr->agent, {tr->x, tr->y}});
    } else if (std::holds_alternative<log_record::Crash>(rec)) {
      ++rep.crashes;
    } else if (const auto* d = std::get_if<log_record::IscaDetect>(&rec)) {
      const auto key = std::minmax(d->agent, d->peer);
      auto& v = detections[{key.first, key.second}];
      const long long k = tick_index(d->t);
      for (long long h = v.empty() ? k : std::max(k, v.back() + 1); h < k + hold; ++h) v.push_back(h);
    }
  }

  PairTicks truth;
  for (const auto& [t, agents] : positions_by_tick)
    for (std::size_t i = 0; i < agents.size(); ++i)
      for (std::size_t j = i + 1; j < agents.size(); ++j)
        if ((agents[j].second - agents[i].second).norm() < cfg.isca.critical_distance) {
          const auto key = std::minmax(agents[i].first, agents[j].first);
          truth[{key.first, key.second}].push_back(t);
        }

  const double minutes = cfg.duration / 60.0;
  rep.crash_free = rep.crashes == 0;
  rep.crashes_per_minute = rep.crashes / (minutes * cfg.swarm_size);
  rep.visited_cells = grid.visited_count();
  rep.total_cells = grid.total_cells();
  rep.coverage_fraction = grid.fraction();
  rep.coverage_per_minute = 100.0 * rep.coverage_fraction / minutes;
  rep.isca = score_isca(truth, detections);
  rep.config_hash = hex64(config_hash(cfg));
  return rep;
}

}  // namespace nanoswarm
