#pragma once

// Batch runners for the three experiments and their summary artifacts.
// Per-run seeds come from (master seed, experiment, cell, run index) only,
// so results do not depend on how many worker threads execute them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mission.hpp"

namespace nanoswarm {

// Runs fn(i) for i in [0, count) over `jobs` threads. Results must be
// written by index.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Called with (run index, config, result) after each run; used to persist logs.
using RunSink = std::function<void(std::size_t, const MissionConfig&, const MissionResult&)>;

inline std::vector<MissionReport> run_batch(const std::vector<MissionConfig>& configs, int jobs,
                                            const RunSink& sink = {}) {
  std::vector<MissionReport> reports(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    MissionResult r = run_mission(configs[i]);
    if (sink) sink(i, configs[i], r);
    reports[i] = r.report;
  });
  return reports;
}

struct Estimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean with a percentile bootstrap 95% interval.
inline Estimate bootstrap_mean(const std::vector<double>& values, std::uint64_t seed, int resamples = 2000) {
  Estimate e;
  if (values.empty()) return e;
  e.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  Rng rng(seed);
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      s += values[std::min(values.size() - 1, static_cast<std::size_t>(rng.uniform() * values.size()))];
    means[b] = s / values.size();
  }
  std::sort(means.begin(), means.end());
  e.ci_low = means[static_cast<std::size_t>(0.025 * (resamples - 1))];
  e.ci_high = means[static_cast<std::size_t>(0.975 * (resamples - 1))];
  return e;
}

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline nlohmann::json report_json(const MissionReport& r) {
  return {{"format_version", kFormatVersion},
          {"config_hash", r.config_hash},
          {"crash_free", r.crash_free},
          {"crashes", r.crashes},
          {"crashes_per_minute", r.crashes_per_minute},
          {"coverage_fraction", r.coverage_fraction},
          {"coverage_per_minute", r.coverage_per_minute},
          {"visited_cells", r.visited_cells},
          {"total_cells", r.total_cells},
          {"isca",
           {{"true_positive", r.isca.true_positive},
            {"false_positive", r.isca.false_positive},
            {"false_negative", r.isca.false_negative},
            {"precision", r.isca.precision},
            {"recall", r.isca.recall}}}};
}

inline std::string report_csv(const MissionReport& r) {
  return "config_hash,crash_free,crashes,crashes_per_minute,coverage_per_minute_pct,isca_tp,isca_fp,isca_fn,"
         "isca_precision,isca_recall\n" +
         r.config_hash + "," + (r.crash_free ? "true" : "false") + "," + std::to_string(r.crashes) + "," +
         fixed(r.crashes_per_minute) + "," + fixed(r.coverage_per_minute) + "," +
         std::to_string(r.isca.true_positive) + "," + std::to_string(r.isca.false_positive) + "," +
         std::to_string(r.isca.false_negative) + "," + fixed(r.isca.precision) + "," + fixed(r.isca.recall) + "\n";
}

// ---------------------------------------------------------------- exp 1

struct Exp1Cell {
  Preset environment = Preset::obstacle_populated;
  SensingMode mode = SensingMode::tof_only;
  int runs = 20;
};

struct Exp1Options {
  std::uint64_t master_seed = 1;
  std::vector<Exp1Cell> cells;
  MissionConfig base;  // overrides shared by every run
  int jobs = 1;
  RunSink sink;

  static std::vector<Exp1Cell> default_cells() {
    return {{Preset::obstacle_free, SensingMode::tof_only, 5},
            {Preset::obstacle_populated, SensingMode::tof_only, 20},
            {Preset::obstacle_populated, SensingMode::tof_and_vision, 20},
            {Preset::narrow_corridor, SensingMode::tof_only, 10},
            {Preset::narrow_corridor, SensingMode::tof_and_vision, 10}};
  }
};

struct Exp1Row {
  Preset environment;
  SensingMode mode;
  int runs = 0;
  int crash_free_runs = 0;
  double crash_free_rate = 0.0;
  Estimate crashes_per_minute;
  Estimate coverage_per_minute;
  std::vector<MissionReport> reports;
};

// Seeds depend on environment and run index, not on mode, so both modes
// fly the same arenas with the same noise streams.
inline MissionConfig exp1_run_config(const Exp1Options& opt, const Exp1Cell& cell, int run) {
  MissionConfig c = opt.base;
  const std::uint64_t s = derive_seed(opt.master_seed, std::string("exp1/") + std::string(to_string(cell.environment)),
                                      static_cast<std::uint64_t>(run));
  c.arena_preset = std::string(to_string(cell.environment));
  c.arena_seed = s;
  c.seed = s;
  c.mode = cell.mode;
  c.swarm_size = 1;
  return c;
}

inline std::vector<Exp1Row> run_experiment1(const Exp1Options& opt) {
  std::vector<MissionConfig> configs;
  std::vector<std::size_t> cell_of;
  for (std::size_t ci = 0; ci < opt.cells.size(); ++ci) {
    if (opt.cells[ci].runs < 1) throw ConfigError("experiment 1 run counts must be at least 1");
    for (int r = 0; r < opt.cells[ci].runs; ++r) {
      configs.push_back(exp1_run_config(opt, opt.cells[ci], r));
      cell_of.push_back(ci);
    }
  }
  const auto reports = run_batch(configs, opt.jobs, opt.sink);
  std::vector<Exp1Row> rows;
  for (std::size_t ci = 0; ci < opt.cells.size(); ++ci) {
    Exp1Row row;
    row.environment = opt.cells[ci].environment;
    row.mode = opt.cells[ci].mode;
    std::vector<double> crash, cover;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (cell_of[i] != ci) continue;
      row.reports.push_back(reports[i]);
      ++row.runs;
      row.crash_free_runs += reports[i].crash_free ? 1 : 0;
      crash.push_back(reports[i].crashes_per_minute);
      cover.push_back(reports[i].coverage_per_minute);
    }
    row.crash_free_rate = static_cast<double>(row.crash_free_runs) / row.runs;
    row.crashes_per_minute = bootstrap_mean(crash, derive_seed(opt.master_seed, "exp1/ci/crash", ci));
    row.coverage_per_minute = bootstrap_mean(cover, derive_seed(opt.master_seed, "exp1/ci/coverage", ci));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string exp1_csv(const std::vector<Exp1Row>& rows) {
  std::string s =
      "environment,mode,runs,crash_free_runs,crash_free_rate,crash_per_min,crash_per_min_ci_low,"
      "crash_per_min_ci_high,coverage_per_min_pct,coverage_ci_low,coverage_ci_high\n";
  for (const auto& r : rows) {
    s += std::string(to_string(r.environment)) + "," + std::string(to_string(r.mode)) + "," + std::to_string(r.runs) +
         "," + std::to_string(r.crash_free_runs) + "," + fixed(r.crash_free_rate) + "," +
         fixed(r.crashes_per_minute.mean) + "," + fixed(r.crashes_per_minute.ci_low) + "," +
         fixed(r.crashes_per_minute.ci_high) + "," + fixed(r.coverage_per_minute.mean) + "," +
         fixed(r.coverage_per_minute.ci_low) + "," + fixed(r.coverage_per_minute.ci_high) + "\n";
  }
  return s;
}

inline nlohmann::json estimate_json(const Estimate& e) {
  return {{"mean", e.mean}, {"ci95", {e.ci_low, e.ci_high}}};
}

inline std::string exp1_json(const std::vector<Exp1Row>& rows, std::uint64_t master_seed) {
  nlohmann::json j = {{"format_version", kFormatVersion}, {"experiment", "exp1"}, {"master_seed", master_seed}};
  auto& out = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& rep : r.reports)
      runs.push_back({{"crash_free", rep.crash_free}, {"crashes", rep.crashes},
                      {"crashes_per_minute", rep.crashes_per_minute},
                      {"coverage_per_minute", rep.coverage_per_minute}, {"config_hash", rep.config_hash}});
    out.push_back({{"environment", to_string(r.environment)},
                   {"mode", to_string(r.mode)},
                   {"runs", r.runs},
                   {"crash_free_runs", r.crash_free_runs},
                   {"crash_free_rate", r.crash_free_rate},
                   {"crashes_per_minute", estimate_json(r.crashes_per_minute)},
                   {"coverage_per_minute_pct", estimate_json(r.coverage_per_minute)},
                   {"per_run", runs}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- exp 2

enum class ObstacleKind { chair, tripod };

inline std::string_view to_string(ObstacleKind k) { return k == ObstacleKind::chair ? "chair" : "tripod"; }

struct ApproachTrace {
  ObstacleKind kind = ObstacleKind::chair;
  std::vector<double> scores;     // collision probability per 10 Hz frame
  std::vector<double> tof_front;  // front ToF per 20 Hz sample
  int impact_frame = 0;           // first frame at or after footprint contact
  double impact_time = 0.0;       // s from trace start

  void validate() const {
    if (scores.size() < 12) throw ConfigError("approach trace needs at least 12 frames");
    if (impact_frame < 0 || static_cast<std::size_t>(impact_frame) >= scores.size())
      throw ConfigError("approach trace impact frame out of range");
  }
};

inline constexpr double kTraceFrameRate = 10.0;
inline constexpr double kTraceTofRate = 20.0;

struct ApproachParams {
  double start_gap = 0.6;        // m, drone center to obstacle surface
  double speed = 0.5;            // m/s
  double max_preroll = 0.4;      // s of hover recorded before the approach
  double lateral_offset = 0.05;  // m, uniform +/- around the target leg
  int instances = 8;             // first 6 chairs, then tripods
  int chair_instances = 6;
  VisionProxyParams vision;
  TofParams tof;
  KinematicLimits kinematics;
};

namespace detail {

inline Arena approach_instance(int instance, std::uint64_t seed, const ApproachParams& p) {
  Arena a;
  a.name = "approach";
  a.width = 10.0;
  a.height = 10.0;
  Rng rng(derive_seed(seed, "exp2/instance", static_cast<std::uint64_t>(instance)));
  const Vec2 center{5.0, 5.0};
  const bool chair = instance < p.chair_instances;
  const int legs = chair ? 4 : 3;
  const double spread = chair ? rng.uniform(0.19, 0.23) * std::sqrt(2.0) : rng.uniform(0.2, 0.3);
  const double radius = chair ? 0.02 : 0.015;
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  for (int l = 0; l < legs; ++l)
    a.obstacles.push_back(ObstacleShape::disc(center + unit_from_angle(phase + 2.0 * kPi * l / legs) * spread, radius, true));
  return a;
}

// Counts subsample indices for a debounce over qualifying flags; returns the
// index of the first trigger or -1.
inline int first_trigger(const std::vector<bool>& qualifies, int needed) {
  int run = 0;
  for (std::size_t i = 0; i < qualifies.size(); ++i) {
    run = qualifies[i] ? run + 1 : 0;
    if (run >= needed) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

// Simulated approach: hover for a random pre-roll, then fly straight at
// `speed` toward the front-most leg of one obstacle instance.
inline std::vector<ApproachTrace> generate_approach_traces(int count, std::uint64_t seed, const ApproachParams& p = {}) {
  std::vector<ApproachTrace> traces;
  for (int i = 0; i < count; ++i) {
    const int instance = i % p.instances;
    Arena arena = detail::approach_instance(instance, seed, p);
    Rng rng(derive_seed(seed, "exp2/trace", static_cast<std::uint64_t>(i)));
    Rng rng_vision(derive_seed(seed, "exp2/vision", static_cast<std::uint64_t>(i)));
    Rng rng_tof(derive_seed(seed, "exp2/tof", static_cast<std::uint64_t>(i)));
    const auto& target = *std::min_element(arena.obstacles.begin(), arena.obstacles.end(), [](const auto& a, const auto& b) {
      return a.as_disc().center.x < b.as_disc().center.x;
    });
    const Disc leg = target.as_disc();
    const double offset = rng.uniform(-p.lateral_offset, p.lateral_offset);
    const double preroll = rng.uniform(0.0, p.max_preroll);
    const Vec2 start{leg.center.x - leg.radius - p.start_gap, leg.center.y + offset};
    const Vec2 dir{1.0, 0.0};
    double contact = std::numeric_limits<double>::infinity();
    for (const auto& o : arena.obstacles) {
      const Disc grown{o.as_disc().center, o.as_disc().radius + p.kinematics.footprint_radius};
      if (const auto hit = detail::ray_disc(start, dir, grown)) contact = std::min(contact, *hit);
    }
    ApproachTrace tr;
    tr.kind = instance < p.chair_instances ? ObstacleKind::chair : ObstacleKind::tripod;
    tr.impact_time = preroll + contact / p.speed;
    tr.impact_frame = static_cast<int>(std::ceil(tr.impact_time * kTraceFrameRate - 1e-9));
    auto body_at = [&](double t) {
      AgentBody b;
      b.position = start + dir * (std::max(0.0, t - preroll) * p.speed);
      b.heading = 0.0;
      b.footprint_radius = p.kinematics.footprint_radius;
      return b;
    };
    for (int f = 0; f <= tr.impact_frame; ++f) {
      const AgentBody b = body_at(f / kTraceFrameRate);
      tr.scores.push_back(sample_vision(arena, std::span(&b, 1), 0, p.vision, rng_vision).probability);
    }
    const int tof_samples = static_cast<int>(std::floor(tr.impact_frame / kTraceFrameRate * kTraceTofRate + 1e-9));
    for (int s = 0; s <= tof_samples; ++s) {
      const AgentBody b = body_at(s / kTraceTofRate);
      tr.tof_front.push_back(sample_tof(arena, std::span(&b, 1), 0, Zone::front, p.tof, rng_tof).distance);
    }
    traces.push_back(std::move(tr));
  }
  return traces;
}

struct DetectionOutcome {
  bool tof = false;
  bool vision = false;
};

inline DetectionOutcome classify_trace(const ApproachTrace& tr, double fps, const OcaState& thresholds = {}) {
  DetectionOutcome out;
  // ToF debounce on samples strictly before the impact time.
  std::vector<bool> tof_q;
  for (std::size_t s = 0; s < tr.tof_front.size() && s / kTraceTofRate < tr.impact_time; ++s)
    tof_q.push_back(tr.tof_front[s] < thresholds.tof_threshold);
  out.tof = detail::first_trigger(tof_q, thresholds.tof_trigger_count) >= 0;

  // Vision debounce on the nearest recorded frame to each k / fps.
  std::vector<bool> vis_q;
  std::vector<int> frame_of;
  const double last = static_cast<double>(tr.scores.size() - 1) / kTraceFrameRate;
  for (int k = 0;; ++k) {
    const double tau = k / fps;
    if (tau > last + 1e-9) break;
    const int frame = std::min(static_cast<int>(std::lround(tau * kTraceFrameRate)), static_cast<int>(tr.scores.size()) - 1);
    frame_of.push_back(frame);
    vis_q.push_back(tr.scores[frame] > thresholds.vision_threshold);
  }
  const int trig = detail::first_trigger(vis_q, thresholds.vision_trigger_count);
  out.vision = trig >= 0 && frame_of[trig] < tr.impact_frame;
  return out;
}

struct Exp2Row {
  double fps = 0.0;
  int tof_detected = 0;
  int vision_only = 0;
  int missed = 0;
  int total = 0;
  double detection_rate() const { return total ? static_cast<double>(tof_detected + vision_only) / total : 0.0; }
  double tof_rate() const { return total ? static_cast<double>(tof_detected) / total : 0.0; }
};

inline std::vector<Exp2Row> run_experiment2(const std::vector<ApproachTrace>& traces, const std::vector<double>& fps_list) {
  for (const auto& tr : traces) tr.validate();
  std::vector<Exp2Row> rows;
  for (double fps : fps_list) {
    if (!(fps >= 1.0 && fps <= 10.0)) throw ConfigError("fps values must lie in [1, 10]");
    Exp2Row row{fps};
    for (const auto& tr : traces) {
      const auto o = classify_trace(tr, fps);
      ++row.total;
      if (o.tof) ++row.tof_detected;
      else if (o.vision) ++row.vision_only;
      else ++row.missed;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string exp2_csv(const std::vector<Exp2Row>& rows) {
  std::string s = "fps,tof_detected,vision_only,missed,total,detection_rate\n";
  for (const auto& r : rows)
    s += fixed(r.fps, 2) + "," + std::to_string(r.tof_detected) + "," + std::to_string(r.vision_only) + "," +
         std::to_string(r.missed) + "," + std::to_string(r.total) + "," + fixed(r.detection_rate()) + "\n";
  return s;
}

inline std::string exp2_json(const std::vector<Exp2Row>& rows, std::uint64_t seed) {
  nlohmann::json j = {{"format_version", kFormatVersion}, {"experiment", "exp2"}, {"seed", seed}};
  auto& out = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"fps", r.fps}, {"tof_detected", r.tof_detected}, {"vision_only", r.vision_only},
                   {"missed", r.missed}, {"total", r.total}, {"detection_rate", r.detection_rate()}});
  return j.dump(2) + "\n";
}

// Recorded traces, one JSON object per line.
inline void write_traces(std::ostream& out, const std::vector<ApproachTrace>& traces) {
  for (const auto& tr : traces) {
    nlohmann::json j = {{"format_version", kFormatVersion}, {"kind", to_string(tr.kind)},
                        {"impact_frame", tr.impact_frame}, {"impact_time", tr.impact_time},
                        {"scores", tr.scores}, {"tof_front", tr.tof_front}};
    out << j.dump() << '\n';
  }
}

inline std::vector<ApproachTrace> read_traces(std::istream& in) {
  std::vector<ApproachTrace> traces;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ApproachTrace tr;
      tr.kind = j.at("kind").get<std::string>() == "tripod" ? ObstacleKind::tripod : ObstacleKind::chair;
      tr.impact_frame = j.at("impact_frame").get<int>();
      tr.impact_time = j.value("impact_time", tr.impact_frame / kTraceFrameRate);
      tr.scores = j.at("scores").get<std::vector<double>>();
      tr.tof_front = j.at("tof_front").get<std::vector<double>>();
      tr.validate();
      traces.push_back(std::move(tr));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed trace: ") + e.what());
    }
  }
  return traces;
}

// ---------------------------------------------------------------- exp 3

struct Exp3Options {
  std::uint64_t master_seed = 1;
  int runs = 5;
  double duration = 586.0 / 5.0;
  MissionConfig base = [] {
    MissionConfig c;
    c.arena_preset = "obstacle_free";
    c.swarm_size = 4;
    c.mode = SensingMode::tof_only;
    return c;
  }();
  int jobs = 1;
  RunSink sink;
};

struct Exp3Result {
  IscaScore total;
  std::vector<MissionReport> reports;
};

inline MissionConfig exp3_run_config(const Exp3Options& opt, int run) {
  MissionConfig c = opt.base;
  c.seed = derive_seed(opt.master_seed, "exp3", static_cast<std::uint64_t>(run));
  c.arena_seed = c.seed;
  c.duration = opt.duration;
  if (c.swarm_size < 2) throw ConfigError("experiment 3 needs a swarm of at least two agents");
  if (c.arena_preset != "obstacle_free") throw ConfigError("experiment 3 runs in the obstacle_free arena");
  return c;
}

inline Exp3Result run_experiment3(const Exp3Options& opt) {
  std::vector<MissionConfig> configs;
  for (int r = 0; r < opt.runs; ++r) configs.push_back(exp3_run_config(opt, r));
  Exp3Result res;
  res.reports = run_batch(configs, opt.jobs, opt.sink);
  for (const auto& rep : res.reports) res.total += rep.isca;
  res.total.finalize();
  return res;
}

inline std::string exp3_csv(const Exp3Result& r) {
  std::string s = "run,true_positive,false_positive,false_negative,precision,recall,crashes\n";
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const auto& x = r.reports[i].isca;
    s += std::to_string(i) + "," + std::to_string(x.true_positive) + "," + std::to_string(x.false_positive) + "," +
         std::to_string(x.false_negative) + "," + fixed(x.precision) + "," + fixed(x.recall) + "," +
         std::to_string(r.reports[i].crashes) + "\n";
  }
  const auto& t = r.total;
  s += "total," + std::to_string(t.true_positive) + "," + std::to_string(t.false_positive) + "," +
       std::to_string(t.false_negative) + "," + fixed(t.precision) + "," + fixed(t.recall) + ",\n";
  return s;
}

inline std::string exp3_json(const Exp3Result& r, std::uint64_t master_seed) {
  auto score = [](const IscaScore& x) {
    return nlohmann::json{{"true_positive", x.true_positive}, {"false_positive", x.false_positive},
                          {"false_negative", x.false_negative}, {"precision", x.precision}, {"recall", x.recall}};
  };
  nlohmann::json j = {{"format_version", kFormatVersion}, {"experiment", "exp3"}, {"master_seed", master_seed},
                      {"total", score(r.total)}};
  auto& runs = j["runs"] = nlohmann::json::array();
  for (const auto& rep : r.reports) runs.push_back({{"isca", score(rep.isca)}, {"crashes", rep.crashes}, {"config_hash", rep.config_hash}});
  return j.dump(2) + "\n";
}

}  // namespace nanoswarm
