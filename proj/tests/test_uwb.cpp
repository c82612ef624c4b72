#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include <nanoswarm/avoidance.hpp>
#include <nanoswarm/uwb.hpp>

using namespace nanoswarm;

namespace {

std::vector<int> ids(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

UwbChannelParams channel(double sigma, double loss) {
  UwbChannelParams c;
  c.range_noise_sigma = sigma;
  c.loss_probability = loss;
  return c;
}

}  // namespace

TEST(Schedule, EveryOrderedPairOncePerCycle) {
  for (int n : {2, 3, 4, 6}) {
    RangingSchedule s(ids(n));
    ASSERT_EQ(s.cycle_length(), static_cast<std::size_t>(n * (n - 1)));
    for (int cycle = 0; cycle < 5; ++cycle) {
      std::map<std::pair<int, int>, int> seen;
      for (std::size_t k = 0; k < s.cycle_length(); ++k) {
        const auto p = s.advance();
        ASSERT_NE(p.initiator, p.responder);
        ++seen[{p.initiator, p.responder}];
      }
      EXPECT_EQ(seen.size(), static_cast<std::size_t>(n * (n - 1))) << "n=" << n;
      for (const auto& [pair, count] : seen) EXPECT_EQ(count, 1);
      EXPECT_TRUE(s.same_state(RangingSchedule(ids(n))));
    }
  }
}

TEST(Schedule, InitiatorRoundRobin) {
  for (int n : {2, 3, 4, 6}) {
    const std::vector<int> order = [&] {
      auto v = ids(n);
      std::reverse(v.begin(), v.end());
      return v;
    }();
    RangingSchedule s(order);
    for (int slot = 0; slot < 3 * n * (n - 1); ++slot) {
      bool closed = false;
      const auto p = s.advance(&closed);
      EXPECT_EQ(p.initiator, order[(slot / (n - 1)) % n]);
      EXPECT_EQ(closed, (slot + 1) % (n - 1) == 0);
    }
    EXPECT_EQ(s.slot(), static_cast<std::uint64_t>(3 * n * (n - 1)));
  }
}

TEST(Schedule, NeedsTwoAgents) {
  EXPECT_THROW(RangingSchedule({0}), DomainError);
}

TEST(Ranging, ThreeFourFive) {
  Rng rng(1);
  const auto m = perform_ranging({0, 1}, {0, 0}, {3, 4}, channel(0.0, 0.0), rng, 2.0);
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(m->range, 5.0);
  EXPECT_EQ(m->time, 2.0);
}

TEST(Ranging, TotalLoss) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(perform_ranging({0, 1}, {0, 0}, {3, 4}, channel(0.1, 1.0), rng));
}

TEST(Ranging, NoiseStatistics) {
  Rng rng(4);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  int got = 0;
  for (int i = 0; i < n; ++i) {
    const auto m = perform_ranging({0, 1}, {0, 0}, {3, 4}, channel(0.1, 0.05), rng);
    if (!m) continue;
    sum += m->range;
    sq += m->range * m->range;
    ++got;
  }
  const double mean = sum / got;
  const double sd = std::sqrt(sq / got - mean * mean);
  EXPECT_NEAR(mean, 5.0, 0.01);
  EXPECT_NEAR(sd, 0.1, 0.005);
  EXPECT_NEAR(static_cast<double>(got) / n, 0.95, 0.01);
}

TEST(Channel, ValidatesLoss) {
  EXPECT_THROW(channel(0.1, 1.5).validate(), DomainError);
  EXPECT_THROW(channel(-0.1, 0.0).validate(), DomainError);
}

TEST(Beacons, PerfectChannelFillsTables) {
  std::vector<PositionBeacon> est{{0, {1, 1}, 0.5}, {1, {2, 1}, 0.5}, {2, {1, 2}, 0.5}, {3, {2, 2}, 0.5}};
  std::vector<BeaconTable> tables(4);
  Rng rng(1);
  const auto d = broadcast_beacons(est, tables, channel(0.1, 0.0), rng);
  EXPECT_EQ(d.size(), 12u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(tables[i].size(), 3u);
    EXPECT_FALSE(tables[i].contains(i));
  }
}

TEST(Beacons, DeadChannelDeliversNothing) {
  std::vector<PositionBeacon> est{{0, {1, 1}}, {1, {1.1, 1}}, {2, {1, 1.1}}, {3, {1.1, 1.1}}};
  std::vector<BeaconTable> tables(4);
  Rng rng(1);
  for (int round = 0; round < 100; ++round) broadcast_beacons(est, tables, channel(0.1, 1.0), rng);
  for (const auto& t : tables) {
    EXPECT_TRUE(t.empty());
    EXPECT_TRUE(isca_check({1, 1}, 0.0, t, 0.65).empty());
  }
}

TEST(Beacons, HalfLossDeliveryRate) {
  std::vector<PositionBeacon> est{{0, {1, 1}}, {1, {2, 1}}, {2, {1, 2}}, {3, {2, 2}}};
  std::map<std::pair<int, int>, int> delivered;
  Rng rng(8);
  const int rounds = 1000;
  for (int r = 0; r < rounds; ++r) {
    std::vector<BeaconTable> tables(4);
    for (const auto& [receiver, b] : broadcast_beacons(est, tables, channel(0.1, 0.5), rng))
      ++delivered[{b.sender, receiver}];
  }
  ASSERT_EQ(delivered.size(), 12u);
  for (const auto& [link, count] : delivered) EXPECT_NEAR(static_cast<double>(count) / rounds, 0.5, 0.05);
}
