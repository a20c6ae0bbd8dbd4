#include <wifixdr/topology.hpp>

#include <gtest/gtest.h>

using namespace wifixdr;
using codec::Beacon;
using codec::TrMessage;

namespace {

const ChannelPlan kPlan;
const TopologyConfig kCfg;

MacAddress mac(std::uint32_t i) { return MacAddress::from_index(0x02, i); }

Beacon beacon_from(const NodeState& n) { return *make_beacon(n, "mesh", 0); }

CandidateParent candidate(std::uint32_t id, int hops, double rssi, std::vector<Channel> list = {},
                          Channel ch = 6) {
  return CandidateParent{mac(id), hops, std::move(list), ch, rssi, 0};
}

}  // namespace

TEST(OnBeacon, GatewayBeaconBecomesOnlyCandidate) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  auto m1 = NodeState::mesh_ap(1, mac(2));
  EXPECT_EQ(on_beacon(m1, beacon_from(gw), -60, 1000, kCfg), BeaconEffect::candidate_updated);
  ASSERT_EQ(m1.candidates.size(), 1u);
  EXPECT_EQ(m1.candidates.begin()->second.hops, 0);

  on_beacon(m1, beacon_from(gw), -60, 2000, kCfg);
  ASSERT_EQ(m1.candidates.size(), 1u);
  EXPECT_EQ(m1.candidates.begin()->second.heard_at, 2000);
}

TEST(OnBeacon, ForeignOuiIsIgnored) {
  auto m1 = NodeState::mesh_ap(1, mac(2));
  Bytes body = *codec::encode_beacon_body(Beacon{mac(1), "x", 0, {}, 6, 0});
  body[body.size() - 5] = 0xAA;  // corrupt the OUI
  EXPECT_EQ(on_beacon_frame(m1, mac(1), body, -60, 0, kCfg), BeaconEffect::ignored);
  EXPECT_TRUE(m1.candidates.empty());
}

TEST(OnBeacon, StaleCandidatesAreEvicted) {
  auto m1 = NodeState::mesh_ap(1, mac(2));
  on_beacon(m1, Beacon{mac(1), "x", 0, {}, 6, 0}, -60, 0, kCfg);
  on_beacon(m1, Beacon{mac(3), "x", 1, {6}, 36, 0}, -60, kCfg.candidate_expiry + 1, kCfg);
  ASSERT_EQ(m1.candidates.size(), 1u);
  EXPECT_EQ(m1.candidates.begin()->first, mac(3));
}

TEST(SelectParent, HopsThenRssiThenBssid) {
  std::map<MacAddress, CandidateParent> c;
  EXPECT_FALSE(select_parent(c));
  c[mac(1)] = candidate(1, 0, -80);
  c[mac(2)] = candidate(2, 1, -40);
  EXPECT_EQ(select_parent(c)->bssid, mac(1));

  c.clear();
  c[mac(2)] = candidate(2, 1, -55);
  c[mac(3)] = candidate(3, 1, -70);
  EXPECT_EQ(select_parent(c)->bssid, mac(2));

  c.clear();
  c[MacAddress{{0xbb, 0, 0, 0, 0, 1}}] = CandidateParent{MacAddress{{0xbb, 0, 0, 0, 0, 1}}, 1, {6}, 36, -60, 0};
  c[MacAddress{{0xaa, 0, 0, 0, 0, 1}}] = CandidateParent{MacAddress{{0xaa, 0, 0, 0, 0, 1}}, 1, {6}, 36, -60, 0};
  EXPECT_EQ(select_parent(c)->bssid, (MacAddress{{0xaa, 0, 0, 0, 0, 1}}));
}

TEST(Join, ThreeHopChainChannels) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  auto m1 = NodeState::mesh_ap(1, mac(2));
  auto m2 = NodeState::mesh_ap(2, mac(3));
  auto m3 = NodeState::mesh_ap(3, mac(4));

  on_beacon(m1, beacon_from(gw), -60, 0, kCfg);
  auto r1 = join(m1, *select_parent(m1.candidates), kPlan);
  EXPECT_EQ(m1.depth, 1);
  EXPECT_EQ(m1.nics[static_cast<std::size_t>(m1.up_nic())].band, Band::ghz24);
  EXPECT_EQ(m1.nics[static_cast<std::size_t>(m1.up_nic())].channel, 6);
  EXPECT_EQ(r1.down_channel, 36);
  EXPECT_EQ(m1.nics[static_cast<std::size_t>(m1.down_nic())].band, Band::ghz5);
  EXPECT_EQ(m1.nics[static_cast<std::size_t>(m1.down_nic())].mode, NicMode::ap_active);

  const auto ie1 = *make_own_ie(m1);
  EXPECT_EQ(ie1.hops, 1);
  EXPECT_EQ(ie1.channels, (std::vector<Channel>{6}));

  on_beacon(m2, beacon_from(m1), -60, 0, kCfg);
  auto r2 = join(m2, *select_parent(m2.candidates), kPlan);
  EXPECT_EQ(m2.depth, 2);
  EXPECT_EQ(m2.nics[static_cast<std::size_t>(m2.up_nic())].channel, 36);
  EXPECT_EQ(r2.down_channel, 1);
  EXPECT_EQ(make_own_ie(m2)->channels, (std::vector<Channel>{6, 36}));

  on_beacon(m3, beacon_from(m2), -60, 0, kCfg);
  auto r3 = join(m3, *select_parent(m3.candidates), kPlan);
  EXPECT_EQ(m3.depth, 3);
  EXPECT_EQ(m3.nics[static_cast<std::size_t>(m3.up_nic())].channel, 1);
  EXPECT_EQ(r3.down_channel, 40);
  EXPECT_EQ(make_own_ie(m3)->channels.size(), 3u);
}

TEST(Join, ContractChecks) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  EXPECT_THROW(join(gw, candidate(5, 0, -60), kPlan), ContractViolation);
  auto m1 = NodeState::mesh_ap(1, mac(2));
  EXPECT_THROW(join(m1, candidate(1, 0, -60, {}, 13), kPlan), ContractViolation);
  join(m1, candidate(1, 0, -60), kPlan);
  EXPECT_THROW(join(m1, candidate(1, 0, -60), kPlan), ContractViolation);
}

TEST(Join, AssociationFailureDemotesCandidate) {
  auto m1 = NodeState::mesh_ap(1, mac(2));
  m1.candidates[mac(1)] = candidate(1, 0, -60);
  m1.candidates[mac(5)] = candidate(5, 0, -70, {}, 11);
  begin_association(m1, *select_parent(m1.candidates), kPlan);
  association_failed(m1);
  EXPECT_FALSE(m1.pending_parent);
  EXPECT_FALSE(m1.candidates.contains(mac(1)));
  EXPECT_EQ(select_parent(m1.candidates)->bssid, mac(5));
}

TEST(OwnIe, GatewayAndUnattached) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  auto ie = make_own_ie(gw);
  ASSERT_TRUE(ie);
  EXPECT_EQ(ie->hops, 0);
  EXPECT_TRUE(ie->channels.empty());
  EXPECT_FALSE(make_own_ie(NodeState::mesh_ap(1, mac(2))));
}

TEST(Stations, TunnelsFollowAssociations) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  const auto ports_before = gw.bridge.ports().size();
  const PortId p1 = on_station_associated(gw, mac(2));
  EXPECT_EQ(gw.tunnels.size(), 1u);
  EXPECT_EQ(gw.bridge.ports().size(), ports_before + 1);
  const PortId p2 = on_station_associated(gw, mac(3));
  EXPECT_NE(p1, p2);
  EXPECT_EQ(on_station_associated(gw, mac(2)), p1);
  EXPECT_EQ(gw.tunnels.size(), 2u);

  gw.bridge.learn(MacAddress::from_index(0x0A, 9), p2, 0);
  EXPECT_TRUE(on_station_lost(gw, mac(3)));
  EXPECT_EQ(gw.tunnels.size(), 1u);
  EXPECT_EQ(gw.bridge.ports().size(), ports_before + 1);
  EXPECT_TRUE(gw.bridge.entries().empty());
  EXPECT_EQ(gw.children, (std::set<MacAddress>{mac(2)}));

  EXPECT_FALSE(on_station_lost(gw, mac(9)));
  EXPECT_EQ(gw.tunnels.size(), 1u);
  EXPECT_FALSE(gw.diagnostics.empty());
}

TEST(ParentLoss, ThresholdAndBeaconReset) {
  auto gw = NodeState::gateway(0, mac(1), 6, Band::ghz24);
  auto m1 = NodeState::mesh_ap(1, mac(2));
  on_beacon(m1, beacon_from(gw), -60, 0, kCfg);
  join(m1, *select_parent(m1.candidates), kPlan);

  EXPECT_FALSE(on_beacon_interval_tick(m1, kCfg));
  on_beacon(m1, beacon_from(gw), -60, 100000, kCfg);  // a single miss is forgiven
  EXPECT_FALSE(on_beacon_interval_tick(m1, kCfg));
  EXPECT_FALSE(on_beacon_interval_tick(m1, kCfg));
  EXPECT_TRUE(on_beacon_interval_tick(m1, kCfg));

  on_station_associated(m1, mac(3));
  EXPECT_EQ(on_parent_lost(m1), mac(1));
  EXPECT_FALSE(m1.attached());
  EXPECT_EQ(m1.depth, -1);
  EXPECT_FALSE(make_beacon(m1, "mesh", 0));
  EXPECT_EQ(m1.nics[static_cast<std::size_t>(m1.down_nic())].mode, NicMode::ap_active);
  EXPECT_EQ(m1.children.size(), 1u);

  EXPECT_FALSE(on_beacon_interval_tick(gw, kCfg));
  EXPECT_FALSE(on_parent_lost(gw));
}

TEST(Reparent, OnlyForStrictlyShorterPaths) {
  auto m = NodeState::mesh_ap(1, mac(2));
  join(m, candidate(5, 2, -60, {6, 36}, 1), kPlan);
  EXPECT_EQ(m.depth, 3);
  EXPECT_TRUE(prefers_reparent(m, candidate(6, 0, -90)));
  EXPECT_TRUE(prefers_reparent(m, candidate(6, 1, -30, {6}, 36)));
  EXPECT_FALSE(prefers_reparent(m, candidate(6, 2, -30, {6, 36}, 1)));
  on_station_associated(m, mac(6));
  EXPECT_FALSE(prefers_reparent(m, candidate(6, 0, -30)));
}

TEST(Reparent, DownChannelMoveIsReported) {
  auto m = NodeState::mesh_ap(1, mac(2));
  join(m, candidate(5, 1, -60, {6}, 36), kPlan);  // DOWN on 2.4 GHz
  on_station_associated(m, mac(7));
  detach_parent(m);
  const auto r = join(m, candidate(1, 0, -60, {}, 6), kPlan);  // now UP on 2.4 GHz
  EXPECT_TRUE(r.down_reconfigured);
  EXPECT_EQ(m.nics[static_cast<std::size_t>(m.up_nic())].band, Band::ghz24);
  EXPECT_EQ(m.nics[static_cast<std::size_t>(m.down_nic())].band, Band::ghz5);
  EXPECT_NE(m.up_nic(), m.down_nic());
}

TEST(BaselineTr, RewriteAndLoopSuppression) {
  auto gw = NodeState::gateway(0, mac(1), 1, Band::ghz24, RadioMode::single);
  auto m1 = NodeState::mesh_ap(1, mac(2), RadioMode::single);
  auto m2 = NodeState::mesh_ap(2, mac(3), RadioMode::single);

  auto out1 = baseline_on_tr(m1, TrMessage{0, mac(1), mac(1)});
  ASSERT_TRUE(out1.forward);
  EXPECT_EQ(*out1.forward, (TrMessage{1, mac(1), mac(2)}));
  EXPECT_EQ(m1.depth, 1);

  // M1's re-emitted TR notifies the GW of its new child.
  auto at_gw = baseline_on_tr(gw, *out1.forward);
  EXPECT_EQ(at_gw.child_added, mac(2));
  EXPECT_TRUE(gw.children.contains(mac(2)));
  EXPECT_FALSE(at_gw.forward);

  auto out2 = baseline_on_tr(m2, *out1.forward);
  EXPECT_EQ(m2.depth, 2);
  ASSERT_TRUE(out2.forward);
  EXPECT_EQ(out2.forward->hops, 2);

  // M2's TR reaching M1 only registers the child; no switch to a deeper node.
  auto back = baseline_on_tr(m1, *out2.forward);
  EXPECT_EQ(back.child_added, mac(3));
  EXPECT_TRUE(back.dropped);
  EXPECT_EQ(m1.parent->mac, mac(1));

  auto stale = baseline_on_tr(m2, TrMessage{3, mac(9), mac(8)});
  EXPECT_TRUE(stale.dropped);
  EXPECT_FALSE(stale.forward);

  auto dual = NodeState::mesh_ap(4, mac(5));
  EXPECT_THROW(baseline_on_tr(dual, TrMessage{0, mac(1), mac(1)}), ContractViolation);
}
