#include <gtest/gtest.h>

#include <sstream>

#include <nanoswarm/nanoswarm.hpp>

using namespace nanoswarm;

namespace {

MissionConfig short_swarm(double duration, double loss) {
  MissionConfig c;
  c.swarm_size = 4;
  c.duration = duration;
  c.seed = 3;
  c.channel.loss_probability = loss;
  return c;
}

}  // namespace

TEST(Config, TextRoundTrip) {
  MissionConfig c;
  c.arena_preset = "obstacle_populated";
  c.arena_seed = 42;
  c.swarm_size = 3;
  c.duration = 61.5;
  c.mode = SensingMode::tof_and_vision;
  c.takeoff_heading = deg_to_rad(30);
  c.channel.loss_probability = 0.2;
  c.compute_profile = "interleaved";
  c.estimator = Estimator::truth;
  c.brake_before_maneuver = false;
  const std::string text = to_text(c);
  EXPECT_EQ(to_text(parse_config(text)), text);
}

TEST(Config, CustomArenaRoundTrip) {
  MissionConfig c;
  c.arena_preset = "obstacle_populated";
  c.arena_seed = 5;
  const MissionConfig custom = with_custom_arena(c, c.arena());
  const MissionConfig back = parse_config(to_text(custom));
  EXPECT_EQ(back.arena(), c.arena());
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config("mission.duration_s = 10\nmission.colour = red\n"), ConfigError);
  EXPECT_THROW(parse_config("just words"), ConfigError);
}

TEST(Config, InvalidValuesRejected) {
  MissionConfig c;
  c.duration = 0.0;
  EXPECT_THROW(c.validate_or_throw(), ConfigError);
  c = MissionConfig{};
  c.arena_preset = "warehouse";
  EXPECT_THROW(c.validate_or_throw(), ConfigError);
  c = MissionConfig{};
  c.swarm_size = 9;
  EXPECT_THROW(c.validate_or_throw(), ConfigError);
  c = MissionConfig{};
  c.uwb_slot_period = 0.015;
  EXPECT_THROW(c.validate_or_throw(), ConfigError);
  c = MissionConfig{};
  c.duration = -1.0;
  EXPECT_THROW(run_mission(c), ConfigError);
}

TEST(Config, CommentsAndFormatVersion) {
  const auto c = parse_config("# header\nformat_version = 1\nswarm.size = 2  # two drones\n\n");
  EXPECT_EQ(c.swarm_size, 2);
  EXPECT_THROW(parse_config("format_version = 7"), ConfigError);
}

TEST(Rng, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, "tof", 0), derive_seed(1, "tof", 1));
  EXPECT_NE(derive_seed(1, "tof", 0), derive_seed(1, "vision", 0));
  EXPECT_EQ(derive_seed(9, "x", 2), derive_seed(9, "x", 2));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Mission, SingleTickRun) {
  MissionConfig c;
  c.duration = 0.01;
  // Take-off points sit on cell corners; a heading into the corner's cell keeps the run in one cell.
  c.takeoff_heading = deg_to_rad(45);
  const auto r = run_mission(c);
  EXPECT_EQ(r.report.crashes, 0);
  EXPECT_TRUE(r.report.crash_free);
  EXPECT_EQ(r.report.visited_cells, 1u);
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    c.takeoff_heading.reset();
    c.seed = seed;
    EXPECT_LE(run_mission(c).report.visited_cells, 4u);
  }
}

TEST(Mission, ObstacleFreeIsCrashFree) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    MissionConfig c;
    c.seed = seed;
    EXPECT_TRUE(run_mission(c).report.crash_free) << "seed " << seed;
  }
}

TEST(Mission, SameConfigSameBytes) {
  MissionConfig c = short_swarm(20.0, 0.05);
  c.arena_preset = "obstacle_populated";
  c.mode = SensingMode::tof_and_vision;
  EXPECT_EQ(run_mission(c).log.serialize(), run_mission(c).log.serialize());
}

TEST(Mission, SeedChangesTrace) {
  MissionConfig a = short_swarm(10.0, 0.05);
  MissionConfig b = a;
  b.seed = 4;
  EXPECT_NE(run_mission(a).log.serialize(), run_mission(b).log.serialize());
}

TEST(Mission, AgentsStayInsideArena) {
  MissionConfig c = short_swarm(60.0, 0.05);
  c.arena_preset = "narrow_corridor";
  const auto r = run_mission(c);
  const Arena a = c.arena();
  for (const auto& rec : r.log.records())
    if (const auto* t = std::get_if<log_record::Trajectory>(&rec)) {
      ASSERT_TRUE(a.contains({t->x, t->y}));
    }
}

TEST(Mission, DeadChannelMissesEveryEvent) {
  const auto r = run_mission(short_swarm(60.0, 1.0));
  EXPECT_EQ(r.report.isca.true_positive, 0);
  EXPECT_EQ(r.report.isca.false_positive, 0);
  EXPECT_GT(r.report.isca.false_negative, 0);
  EXPECT_DOUBLE_EQ(r.report.isca.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.report.isca.precision, 1.0);
}

TEST(Replay, StoredLogReproducesReport) {
  MissionConfig c = short_swarm(30.0, 0.05);
  c.arena_preset = "obstacle_populated";
  c.arena_seed = 8;
  const auto r = run_mission(c);
  const std::string bytes = r.log.serialize();
  const EventLog back = EventLog::parse(bytes);
  EXPECT_EQ(compute_report(back), r.report);
  EXPECT_EQ(back.serialize(), bytes);
}

TEST(Replay, RejectsMalformedLogs) {
  EXPECT_THROW(EventLog::parse(""), ConfigError);
  EXPECT_THROW(EventLog::parse("{\"type\":\"traj\"}\n"), ConfigError);
  EXPECT_THROW(EventLog::parse("{\"type\":\"header\",\"format_version\":99,\"config\":[]}\n"), ConfigError);
  const std::string head = EventLog(MissionConfig{}).serialize();
  EXPECT_THROW(EventLog::parse(head + "{\"type\":\"teleport\",\"t\":0}\n"), ConfigError);
}

TEST(EventLog, TimestampsMustNotDecrease) {
  EventLog log;
  log.append(log_record::Vision{1.0, 0, 0.5});
  EXPECT_THROW(log.append(log_record::Vision{0.5, 0, 0.5}), DomainError);
}

TEST(Metrics, IntervalScoring) {
  PairTicks truth{{{0, 1}, {10, 11, 12, 40, 41}}, {{1, 2}, {100}}};
  PairTicks det{{{0, 1}, {12, 13, 70}}, {{0, 2}, {5}}};
  const auto s = score_isca(truth, det);
  EXPECT_EQ(s.true_positive, 1);
  EXPECT_EQ(s.false_negative, 2);
  EXPECT_EQ(s.false_positive, 2);
  EXPECT_DOUBLE_EQ(s.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0 / 3.0);
}

TEST(Metrics, EmptyScoresArePerfect) {
  const auto s = score_isca({}, {});
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
}

TEST(Metrics, CrashRateIsPerAgentMinute) {
  MissionConfig c;
  c.swarm_size = 2;
  c.duration = 120.0;
  EventLog log(c);
  log.append(log_record::Trajectory{0.0, 0, 1, 1, 0, 1, 1});
  log.append(log_record::Crash{5.0, 0, 1, 1, {Collider::Kind::wall, 0}});
  log.append(log_record::Crash{6.0, 1, 2, 2, {Collider::Kind::wall, 1}});
  const auto r = compute_report(log);
  EXPECT_EQ(r.crashes, 2);
  EXPECT_FALSE(r.crash_free);
  EXPECT_DOUBLE_EQ(r.crashes_per_minute, 0.5);
  EXPECT_EQ(r.visited_cells, 1u);
}
