// nanoswarm command line: single missions, experiment batches, replay.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nanoswarm/nanoswarm.hpp>

namespace fs = std::filesystem;
using namespace nanoswarm;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + path.string() + "'");
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  return dir;
}

std::string run_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run%03zu.log", index);
  return buf;
}

struct Options {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  int runs = 0;
  std::string mode;
  int jobs = 1;
  bool write_logs = false;
  std::vector<double> fps{1, 2, 3, 4, 5, 6, 8, 10};
  std::string traces;
  std::string log_path;
};

MissionConfig base_config(const Options& o) {
  MissionConfig c = o.config_path.empty() ? MissionConfig{} : parse_config(read_file(o.config_path));
  if (!o.mode.empty()) {
    const auto m = parse_sensing_mode(o.mode);
    if (!m) throw ConfigError("unknown mode '" + o.mode + "'");
    c.mode = *m;
  }
  return c;
}

RunSink log_sink(const Options& o) {
  if (o.out.empty() || !o.write_logs) return {};
  const fs::path dir = o.out;
  return [dir](std::size_t i, const MissionConfig&, const MissionResult& r) {
    write_file(dir / run_name(i), r.log.serialize());
  };
}

void emit(const Options& o, const std::string& csv, const std::string& json) {
  if (o.out.empty()) {
    std::cout << csv;
    return;
  }
  const fs::path dir = prepare_out(o.out);
  write_file(dir / "summary.csv", csv);
  write_file(dir / "summary.json", json);
  std::cout << csv;
}

int cmd_run(const Options& o) {
  MissionConfig c = base_config(o);
  if (o.seed_set) c.seed = o.seed;
  c.validate_or_throw();
  const MissionResult r = run_mission(c);
  if (!o.out.empty()) {
    const fs::path dir = prepare_out(o.out);
    write_file(dir / "config.txt", to_text(c));
    write_file(dir / run_name(0), r.log.serialize());
  }
  emit(o, report_csv(r.report), report_json(r.report).dump(2) + "\n");
  return 0;
}

int cmd_exp1(const Options& o) {
  Exp1Options e;
  e.base = base_config(o);
  e.master_seed = o.seed;
  e.jobs = o.jobs;
  e.sink = log_sink(o);
  for (auto cell : Exp1Options::default_cells()) {
    if (!o.mode.empty() && cell.mode != e.base.mode) continue;
    if (o.runs > 0) cell.runs = o.runs;
    e.cells.push_back(cell);
  }
  if (o.runs < 0) throw ConfigError("--runs must be at least 1");
  if (!o.out.empty()) write_file(prepare_out(o.out) / "config.txt", to_text(e.base));
  const auto rows = run_experiment1(e);
  emit(o, exp1_csv(rows), exp1_json(rows, e.master_seed));
  return 0;
}

int cmd_exp2(const Options& o) {
  const MissionConfig base = base_config(o);
  std::vector<ApproachTrace> traces;
  if (!o.traces.empty()) {
    std::ifstream in(o.traces);
    if (!in) throw IoError("cannot read '" + o.traces + "'");
    traces = read_traces(in);
  } else {
    ApproachParams p;
    p.vision = base.vision;
    p.tof = base.tof;
    p.kinematics = base.kinematics;
    const int count = o.runs > 0 ? o.runs : 64;
    traces = generate_approach_traces(count, o.seed, p);
  }
  if (traces.empty()) throw ConfigError("no approach traces");
  if (!o.out.empty() && o.write_logs) {
    std::ostringstream s;
    write_traces(s, traces);
    write_file(prepare_out(o.out) / "traces.jsonl", s.str());
  }
  const auto rows = run_experiment2(traces, o.fps);
  emit(o, exp2_csv(rows), exp2_json(rows, o.seed));
  return 0;
}

int cmd_exp3(const Options& o) {
  Exp3Options e;
  if (!o.config_path.empty() || !o.mode.empty()) e.base = base_config(o);
  e.master_seed = o.seed;
  e.jobs = o.jobs;
  e.sink = log_sink(o);
  if (o.runs > 0) e.runs = o.runs;
  if (!o.config_path.empty()) e.duration = e.base.duration;
  if (!o.out.empty()) write_file(prepare_out(o.out) / "config.txt", to_text(e.base));
  const auto r = run_experiment3(e);
  emit(o, exp3_csv(r), exp3_json(r, e.master_seed));
  return 0;
}

int cmd_replay(const Options& o) {
  std::ifstream in(o.log_path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + o.log_path + "'");
  const EventLog log = EventLog::read(in);
  const MissionReport rep = compute_report(log);
  emit(o, report_csv(rep), report_json(rep).dump(2) + "\n");
  return 0;
}

int cmd_presets(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path{} : prepare_out(o.out);
  for (auto p : {Preset::obstacle_free, Preset::obstacle_populated, Preset::narrow_corridor}) {
    MissionConfig c;
    c.arena_preset = std::string(to_string(p));
    c.arena_seed = o.seed;
    const std::string text = to_text(with_custom_arena(c, c.arena()));
    if (dir.empty()) std::cout << "# preset " << to_string(p) << "\n" << text << "\n";
    else write_file(dir / ("config." + std::string(to_string(p)) + ".txt"), text);
  }
  std::cout << "# compute profiles\n";
  for (const auto& name : compute_profiles::names()) {
    const auto m = *compute_profiles::by_name(name);
    std::printf("%-16s collision_cnn_rate=%.4f Hz\n", name.c_str(), collision_cnn_rate(m));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nanoswarm: deterministic nano-drone swarm simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool batch) {
    sub->add_option("--config", o.config_path, "Mission config file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s; o.seed_set = true; }, "Seed (master seed for batches)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--mode", o.mode, "tof_only | tof_and_vision")->check(CLI::IsMember({"tof_only", "tof_and_vision"}));
    if (batch) {
      sub->add_option("--runs", o.runs, "Runs per cell (exp1), runs (exp3) or trace count (exp2)")
          ->check(CLI::PositiveNumber);
      sub->add_option("--jobs", o.jobs, "Parallel runs")->check(CLI::PositiveNumber);
      sub->add_flag("--write-logs", o.write_logs, "Store runNNN.log (exp2: traces.jsonl) under --out");
    }
  };

  auto* run = app.add_subcommand("run", "Single mission");
  common(run, false);
  auto* exp1 = app.add_subcommand("exp1", "Crash-free rate, crash/min and coverage/min per environment");
  common(exp1, true);
  auto* exp2 = app.add_subcommand("exp2", "Detection rate against CNN frame rate");
  common(exp2, true);
  exp2->add_option("--fps", o.fps, "Frame rates")->delimiter(',');
  exp2->add_option("--traces", o.traces, "Recorded approach traces (JSON lines)")->check(CLI::ExistingFile);
  auto* exp3 = app.add_subcommand("exp3", "Intra-swarm detection precision and recall");
  common(exp3, true);
  auto* replay = app.add_subcommand("replay", "Recompute a report from a stored log");
  replay->add_option("log", o.log_path, "Event log")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", o.out, "Output directory");
  auto* presets = app.add_subcommand("presets", "Emit built-in arenas as config files");
  presets->add_option("--seed", o.seed, "Arena seed");
  presets->add_option("--out", o.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o);
    if (exp1->parsed()) return cmd_exp1(o);
    if (exp2->parsed()) return cmd_exp2(o);
    if (exp3->parsed()) return cmd_exp3(o);
    if (replay->parsed()) return cmd_replay(o);
    if (presets->parsed()) return cmd_presets(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
