#include <wifixdr/medium.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace wifixdr;

namespace {

// Recomputed term by term from the default 802.11a/g OFDM constants.
double reference_airtime(double payload) {
  return 34.0 + 67.5 + 20.0 + 8.0 * (28.0 + payload) / 54.0 + 16.0 + 20.0 + 8.0 * 14.0 / 24.0;
}

ConflictGraph chain(int n, int range = 1) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return ConflictGraph(n, e, range);
}

}  // namespace

TEST(Airtime, DefaultConstants) {
  const AirtimeConstants c;
  EXPECT_NEAR(airtime(1442, c), 379.94, 0.01);
  EXPECT_NEAR(airtime(0, c), 166.31, 0.01);
  EXPECT_NEAR(airtime(60, c), 175.20, 0.01);
  for (std::size_t p : {0u, 13u, 60u, 1442u, 2320u}) {
    EXPECT_DOUBLE_EQ(airtime(p, c), reference_airtime(static_cast<double>(p)));
  }
  EXPECT_EQ(airtime_ticks(1442, c), 380);
  EXPECT_NEAR(8.0 * 1400.0 / airtime(1442, c), 29.478, 0.001);
}

TEST(Airtime, ConstantsAreConfigurableAndValidated) {
  AirtimeConstants c;
  c.data_rate_mbps = 6.0;
  EXPECT_GT(airtime(1442, c), 2000.0);
  EXPECT_NO_THROW(c.validate());
  c.slot_us = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Conflicts, SameChannelAdjacentBssConflict) {
  const auto g = chain(5);
  EXPECT_TRUE(g.conflicts({0, 1, 6}, {2, 1, 6}));
  EXPECT_TRUE(g.conflicts({1, 2, 6}, {3, 4, 6}));  // 2 and 3 adjacent
}

TEST(Conflicts, DifferentChannelsNeverConflict) {
  const auto g = chain(5);
  EXPECT_FALSE(g.conflicts({0, 1, 6}, {0, 1, 36}));
  EXPECT_FALSE(g.conflicts({1, 0, 6}, {1, 2, 36}));
}

TEST(Conflicts, TwoHopsFromEveryEndpointIsFree) {
  const auto g = chain(5);
  EXPECT_FALSE(g.conflicts({0, 1, 6}, {3, 4, 6}));
  EXPECT_TRUE(chain(5, 2).conflicts({0, 1, 6}, {3, 4, 6}));
}

TEST(Conflicts, BroadcastUsesSenderOnly) {
  const auto g = chain(5);
  EXPECT_FALSE(g.conflicts({0, std::nullopt, 1}, {2, 3, 1}));
  EXPECT_TRUE(g.conflicts({1, std::nullopt, 1}, {2, 3, 1}));
}

TEST(Conflicts, SymmetricOnRandomGraphs) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 8);
    std::vector<std::pair<NodeId, NodeId>> e;
    for (int i = 1; i < n; ++i) e.emplace_back(i, static_cast<int>(rng() % static_cast<unsigned>(i)));
    const ConflictGraph g(n, e);
    for (int k = 0; k < 200; ++k) {
      TxEndpoints a{static_cast<int>(rng() % n), static_cast<int>(rng() % n), rng() % 2 ? 1 : 36};
      TxEndpoints b{static_cast<int>(rng() % n), static_cast<int>(rng() % n), rng() % 2 ? 1 : 36};
      ASSERT_EQ(g.conflicts(a, b), g.conflicts(b, a));
    }
  }
}

TEST(Conflicts, HopDistances) {
  const auto g = chain(4);
  EXPECT_EQ(g.hop_distance(0, 3), 3);
  EXPECT_TRUE(g.adjacent(1, 2));
  EXPECT_FALSE(g.adjacent(1, 1));
  const ConflictGraph split(3, {{0, 1}});
  EXPECT_EQ(split.hop_distance(0, 2), ConflictGraph::kUnreachable);
  EXPECT_THROW(ConflictGraph(2, {{0, 5}}), ConfigError);
  EXPECT_THROW(ConflictGraph(2, {{0, 1}}, 0), ConfigError);
}

TEST(EventQueue, OrdersByTimeRankNodeSequence) {
  EventQueue<int> q;
  q.push(10, 1, 0, 1);
  q.push(5, 2, 3, 2);
  q.push(5, 2, 1, 3);
  q.push(5, 0, 9, 4);
  q.push(5, 2, 1, 5);
  std::vector<int> got;
  while (!q.empty()) got.push_back(q.pop().payload);
  EXPECT_EQ(got, (std::vector<int>{4, 3, 5, 2, 1}));
}
