#pragma once

// Per-node active-topology state: beacon listening, parent selection,
// association and DOWN-NIC bring-up, own-IE synthesis, tunnel lifecycle on
// (dis)association, parent-loss detection, and the single-radio baseline's
// TR handling.
//
// All functions here are synchronous state transitions. Timing (scan
// windows, association latency, beacon cadence) is driven by the simulator.

#include <wifixdr/bridge.hpp>
#include <wifixdr/channel_assign.hpp>
#include <wifixdr/common.hpp>
#include <wifixdr/frame_codec.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wifixdr {

enum class RadioMode : std::uint8_t { dual, single };

enum class NicRole : std::uint8_t { unset, up, down, gw_single, single_radio };
enum class NicMode : std::uint8_t { idle, scanning, associating, associated, ap_active };

inline std::string_view to_string(NicRole r) noexcept {
  switch (r) {
    case NicRole::unset: return "unset";
    case NicRole::up: return "UP";
    case NicRole::down: return "DOWN";
    case NicRole::gw_single: return "GW";
    case NicRole::single_radio: return "SINGLE";
  }
  return "?";
}

struct NicState {
  NicRole role = NicRole::unset;
  Band band = Band::ghz24;
  std::optional<Channel> channel;
  NicMode mode = NicMode::idle;
  MacAddress mac;
};

struct TopologyConfig {
  Micros beacon_interval = 100'000;
  Micros association_latency = 10'000;
  int beacon_loss_threshold = 3;
  // Candidates not heard for this long are evicted.
  Micros candidate_expiry = 300'000;
  Micros tr_period = 1'000'000;
};

struct CandidateParent {
  MacAddress bssid;
  int hops = 0;
  std::vector<Channel> channel_list;
  Channel tx_channel = 0;
  double rssi_dbm = 0.0;
  Micros heard_at = 0;
};

struct ParentInfo {
  MacAddress mac;
  int hops = 0;
  std::vector<Channel> channel_list;
  Channel channel = 0;
};

// Virtual-link endpoint (the tap of a real deployment).
struct TunnelEndpoint {
  MacAddress peer;
  PortId port = kLocalHostPort;
  TunnelRole role = TunnelRole::none;
};

struct ForwardingCounters {
  std::uint64_t rx = 0;
  std::uint64_t tx = 0;
  std::uint64_t relayed = 0;
  std::uint64_t flooded = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered_local = 0;
};

struct NodeState {
  NodeId id = 0;
  MacAddress mac;
  bool is_gw = false;
  RadioMode radio = RadioMode::dual;
  // Dual-radio MAP: nics[0] is the 2.4 GHz radio, nics[1] the 5 GHz radio.
  // GW and single-radio nodes have exactly one NIC.
  std::vector<NicState> nics;
  std::optional<ParentInfo> parent;
  std::optional<CandidateParent> pending_parent;
  int depth = -1;
  std::set<MacAddress> children;
  std::map<MacAddress, CandidateParent> candidates;
  std::map<MacAddress, TunnelEndpoint> tunnels;
  int missed_beacons = 0;
  BridgeTable bridge;
  ForwardingCounters counters;
  std::optional<WeightTable> last_weights;
  // Bumped on every change to parent, depth, channels or children.
  std::uint64_t revision = 0;
  std::vector<std::string> diagnostics;

  static NodeState gateway(NodeId id, const MacAddress& mac, Channel channel, Band band,
                           RadioMode radio = RadioMode::dual) {
    NodeState n;
    n.id = id;
    n.mac = mac;
    n.is_gw = true;
    n.radio = radio;
    n.depth = 0;
    n.nics.push_back(NicState{NicRole::gw_single, band, channel, NicMode::ap_active, mac});
    return n;
  }

  static NodeState mesh_ap(NodeId id, const MacAddress& mac, RadioMode radio = RadioMode::dual) {
    NodeState n;
    n.id = id;
    n.mac = mac;
    n.radio = radio;
    if (radio == RadioMode::dual) {
      n.nics.push_back(NicState{NicRole::unset, Band::ghz24, std::nullopt, NicMode::scanning, mac});
      n.nics.push_back(NicState{NicRole::unset, Band::ghz5, std::nullopt, NicMode::scanning, mac});
    } else {
      n.nics.push_back(NicState{NicRole::single_radio, Band::ghz24, std::nullopt, NicMode::scanning, mac});
    }
    return n;
  }

  bool attached() const noexcept { return is_gw || parent.has_value(); }

  int nic_with_role(NicRole role) const noexcept {
    for (std::size_t i = 0; i < nics.size(); ++i) {
      if (nics[i].role == role) return static_cast<int>(i);
    }
    return -1;
  }
  int up_nic() const noexcept { return nic_with_role(NicRole::up); }
  int down_nic() const noexcept { return nic_with_role(NicRole::down); }

  int radio_for(Band b) const noexcept {
    for (std::size_t i = 0; i < nics.size(); ++i) {
      if (nics[i].band == b) return static_cast<int>(i);
    }
    return -1;
  }

  // Channel this node's own beacons go out on, if it is serving a BSS.
  std::optional<Channel> ap_channel() const noexcept {
    if (is_gw) return nics.front().channel;
    const int d = down_nic();
    if (d < 0 || nics[static_cast<std::size_t>(d)].mode != NicMode::ap_active) return std::nullopt;
    return nics[static_cast<std::size_t>(d)].channel;
  }
};

// ---------------------------------------------------------------------------
// Beacon listening and parent selection
// ---------------------------------------------------------------------------

enum class BeaconEffect : std::uint8_t { ignored, candidate_updated, parent_refreshed, parent_changed };

inline void evict_stale_candidates(NodeState& node, Micros now, const TopologyConfig& cfg) {
  std::erase_if(node.candidates,
                [&](const auto& kv) { return now - kv.second.heard_at > cfg.candidate_expiry; });
}

inline BeaconEffect on_beacon(NodeState& node, const codec::Beacon& b, double rssi_dbm, Micros now,
                              const TopologyConfig& cfg) {
  evict_stale_candidates(node, now, cfg);
  if (node.is_gw || b.bssid == node.mac) return BeaconEffect::ignored;
  if (static_cast<std::size_t>(b.hops) != b.channel_list.size() || b.hops >= 255) return BeaconEffect::ignored;
  if (node.children.contains(b.bssid)) return BeaconEffect::ignored;

  node.candidates[b.bssid] = CandidateParent{b.bssid, b.hops, b.channel_list, b.tx_channel, rssi_dbm, now};

  if (node.parent && node.parent->mac == b.bssid) {
    node.missed_beacons = 0;
    if (node.parent->hops != b.hops || node.parent->channel_list != b.channel_list) {
      node.parent->hops = b.hops;
      node.parent->channel_list = b.channel_list;
      node.depth = b.hops + 1;
      ++node.revision;
      return BeaconEffect::parent_changed;
    }
    return BeaconEffect::parent_refreshed;
  }
  return BeaconEffect::candidate_updated;
}

// Raw-body variant: beacons without a valid WiFIX-DR IE are not candidates.
inline BeaconEffect on_beacon_frame(NodeState& node, const MacAddress& bssid, std::span<const std::uint8_t> body,
                                    double rssi_dbm, Micros now, const TopologyConfig& cfg) {
  auto b = codec::decode_beacon_body(bssid, body);
  if (!b) return BeaconEffect::ignored;
  return on_beacon(node, *b, rssi_dbm, now, cfg);
}

// Fewest hops, then strongest signal, then lowest BSSID.
inline std::optional<CandidateParent> select_parent(const std::map<MacAddress, CandidateParent>& candidates) {
  const CandidateParent* best = nullptr;
  for (const auto& [mac, c] : candidates) {
    if (!best || c.hops < best->hops || (c.hops == best->hops && c.rssi_dbm > best->rssi_dbm) ||
        (c.hops == best->hops && c.rssi_dbm == best->rssi_dbm && c.bssid < best->bssid)) {
      best = &c;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

// A strictly shorter path to the GW is worth re-joining for.
inline bool prefers_reparent(const NodeState& node, const CandidateParent& c) {
  return node.parent && !node.children.contains(c.bssid) && c.hops + 1 < node.depth;
}

// ---------------------------------------------------------------------------
// Tunnels
// ---------------------------------------------------------------------------

// Parent side of an association: one tunnel port per child, idempotent.
inline PortId on_station_associated(NodeState& parent_node, const MacAddress& child_mac) {
  if (auto it = parent_node.tunnels.find(child_mac); it != parent_node.tunnels.end()) {
    return it->second.port;
  }
  const PortId port = parent_node.bridge.add_tunnel_port(child_mac, TunnelRole::child);
  parent_node.tunnels.emplace(child_mac, TunnelEndpoint{child_mac, port, TunnelRole::child});
  parent_node.children.insert(child_mac);
  ++parent_node.revision;
  return port;
}

inline bool on_station_lost(NodeState& parent_node, const MacAddress& child_mac) {
  auto it = parent_node.tunnels.find(child_mac);
  if (it == parent_node.tunnels.end() || it->second.role != TunnelRole::child) {
    parent_node.diagnostics.push_back("station lost for unknown child " + child_mac.to_string());
    return false;
  }
  parent_node.bridge.remove_port(it->second.port);
  parent_node.tunnels.erase(it);
  parent_node.children.erase(child_mac);
  ++parent_node.revision;
  return true;
}

inline void attach_parent_tunnel(NodeState& node, const MacAddress& parent_mac) {
  const PortId port = node.bridge.add_tunnel_port(parent_mac, TunnelRole::parent);
  node.tunnels[parent_mac] = TunnelEndpoint{parent_mac, port, TunnelRole::parent};
}

// Drops the UP association and its tunnel; returns the former parent.
inline std::optional<MacAddress> detach_parent(NodeState& node) {
  if (!node.parent) return std::nullopt;
  const MacAddress old = node.parent->mac;
  if (auto it = node.tunnels.find(old); it != node.tunnels.end() && it->second.role == TunnelRole::parent) {
    node.bridge.remove_port(it->second.port);
    node.tunnels.erase(it);
  }
  node.parent.reset();
  node.depth = -1;
  node.missed_beacons = 0;
  for (auto& nic : node.nics) {
    if (nic.role == NicRole::up || nic.role == NicRole::single_radio) {
      nic.mode = NicMode::scanning;
      if (nic.role == NicRole::up) nic.channel.reset();
    }
  }
  ++node.revision;
  return old;
}

// ---------------------------------------------------------------------------
// Joining (dual radio)
// ---------------------------------------------------------------------------

// Configures the radio in the parent's band as UP-NIC (STA mode) and starts
// the association. Band alternation is decided here: the other radio will be
// the DOWN-NIC.
inline void begin_association(NodeState& node, const CandidateParent& parent, const ChannelPlan& plan) {
  if (node.is_gw) throw ContractViolation("begin_association: the GW never joins a parent");
  if (node.radio != RadioMode::dual) throw ContractViolation("begin_association: dual-radio nodes only");
  if (node.parent) throw ContractViolation("begin_association: node is already associated");
  const auto band = plan.band_of(parent.tx_channel);
  if (!band) {
    throw ContractViolation("begin_association: parent channel " + std::to_string(parent.tx_channel) +
                            " is not in the channel plan");
  }
  const int up = node.radio_for(*band);
  // An existing DOWN-NIC on the other radio keeps serving children while the
  // UP side associates. If the roles swap, the old UP radio idles until
  // complete_association brings it up as DOWN-NIC.
  for (std::size_t i = 0; i < node.nics.size(); ++i) {
    if (static_cast<int>(i) != up && node.nics[i].role == NicRole::up) {
      node.nics[i].role = NicRole::unset;
      node.nics[i].mode = NicMode::idle;
      node.nics[i].channel.reset();
    }
  }
  auto& nic = node.nics[static_cast<std::size_t>(up)];
  nic.role = NicRole::up;
  nic.channel = parent.tx_channel;
  nic.mode = NicMode::associating;
  node.pending_parent = parent;
  ++node.revision;
}

struct JoinResult {
  Channel down_channel = 0;
  // True when a previously active DOWN-NIC had to move (band or channel);
  // the caller must disassociate the old children.
  bool down_reconfigured = false;
};

inline JoinResult complete_association(NodeState& node, const ChannelPlan& plan) {
  if (!node.pending_parent) throw ContractViolation("complete_association: no association in progress");
  const CandidateParent p = *node.pending_parent;
  node.pending_parent.reset();

  const int up = node.up_nic();
  auto& up_nic = node.nics[static_cast<std::size_t>(up)];
  up_nic.mode = NicMode::associated;
  node.parent = ParentInfo{p.bssid, p.hops, p.channel_list, p.tx_channel};
  node.depth = p.hops + 1;
  node.missed_beacons = 0;
  attach_parent_tunnel(node, p.bssid);

  const int down = up == 0 ? 1 : 0;
  auto& down_nic = node.nics[static_cast<std::size_t>(down)];
  const auto candidates = candidate_channels(up_nic.band, plan);
  WeightTable weights = apply_weight_reduction(node.depth, candidates, p.channel_list);
  const Channel ch = assign_channel(weights, candidates);
  node.last_weights = std::move(weights);

  JoinResult r;
  r.down_channel = ch;
  const bool was_active = down_nic.role == NicRole::down && down_nic.mode == NicMode::ap_active;
  const bool moved_band = node.down_nic() < 0 || node.down_nic() != down;
  r.down_reconfigured = !node.children.empty() && (!was_active || moved_band || down_nic.channel != ch);
  down_nic.role = NicRole::down;
  down_nic.channel = ch;
  down_nic.mode = NicMode::ap_active;
  ++node.revision;
  return r;
}

// Association did not complete: demote the candidate and go back to scanning.
inline void association_failed(NodeState& node) {
  if (!node.pending_parent) return;
  node.candidates.erase(node.pending_parent->bssid);
  node.pending_parent.reset();
  const int up = node.up_nic();
  if (up >= 0) {
    auto& nic = node.nics[static_cast<std::size_t>(up)];
    nic.mode = NicMode::scanning;
    nic.channel.reset();
  }
  ++node.revision;
}

// Synchronous join: association plus DOWN-NIC bring-up.
inline JoinResult join(NodeState& node, const CandidateParent& parent, const ChannelPlan& plan) {
  begin_association(node, parent, plan);
  return complete_association(node, plan);
}

// Removes every child (DOWN-NIC reconfigured); returns their MACs.
inline std::vector<MacAddress> deauthenticate_children(NodeState& node) {
  std::vector<MacAddress> gone(node.children.begin(), node.children.end());
  for (const auto& c : gone) on_station_lost(node, c);
  return gone;
}

// ---------------------------------------------------------------------------
// Own beacon content
// ---------------------------------------------------------------------------

// GW: (0, []); associated MAP: (depth, parent list ++ [UP-NIC channel]);
// anything else does not beacon.
inline std::optional<codec::VendorIE> make_own_ie(const NodeState& node) {
  if (node.is_gw) return codec::VendorIE{0, {}};
  if (!node.parent) return std::nullopt;
  const int up = node.up_nic();
  if (up < 0 || !node.nics[static_cast<std::size_t>(up)].channel) return std::nullopt;
  codec::VendorIE ie;
  ie.hops = node.depth;
  ie.channels = node.parent->channel_list;
  ie.channels.push_back(*node.nics[static_cast<std::size_t>(up)].channel);
  return ie;
}

inline std::optional<codec::Beacon> make_beacon(const NodeState& node, const std::string& ssid, Micros now) {
  if (node.radio != RadioMode::dual) return std::nullopt;
  auto ie = make_own_ie(node);
  auto ch = node.ap_channel();
  if (!ie || !ch) return std::nullopt;
  return codec::Beacon{node.mac, ssid, ie->hops, std::move(ie->channels), *ch, now};
}

// ---------------------------------------------------------------------------
// Parent loss
// ---------------------------------------------------------------------------

// Called once per beacon interval (TR period in single-radio mode). Returns
// true once the parent has been silent for the configured threshold.
inline bool on_beacon_interval_tick(NodeState& node, const TopologyConfig& cfg) {
  if (node.is_gw || !node.parent) return false;
  ++node.missed_beacons;
  return node.missed_beacons >= cfg.beacon_loss_threshold;
}

// UP side torn down, DOWN side keeps its children, node goes back to
// scanning with a clean candidate set. Returns the lost parent.
inline std::optional<MacAddress> on_parent_lost(NodeState& node) {
  if (node.is_gw) return std::nullopt;
  auto old = detach_parent(node);
  node.candidates.clear();
  node.pending_parent.reset();
  return old;
}

// ---------------------------------------------------------------------------
// Single-radio baseline (TR driven)
// ---------------------------------------------------------------------------

struct TrOutcome {
  std::optional<codec::TrMessage> forward;
  bool parent_changed = false;
  std::optional<MacAddress> child_added;
  std::optional<MacAddress> child_removed;
  bool dropped = false;
};

inline TrOutcome baseline_on_tr(NodeState& node, const codec::TrMessage& tr) {
  if (node.radio != RadioMode::single) throw ContractViolation("baseline_on_tr: single-radio mode only");
  TrOutcome out;
  const MacAddress& sender = tr.origin_addr;
  if (sender == node.mac) {
    out.dropped = true;
    return out;
  }

  // The TR doubles as parent notification.
  if (tr.parent_addr == node.mac && !node.children.contains(sender)) {
    on_station_associated(node, sender);
    out.child_added = sender;
  } else if (tr.parent_addr != node.mac && node.children.contains(sender)) {
    on_station_lost(node, sender);
    out.child_removed = sender;
  }
  if (node.is_gw) {
    out.dropped = true;
    return out;
  }

  const int h = tr.hops;
  const bool from_parent = node.parent && node.parent->mac == sender;
  if (from_parent) {
    node.missed_beacons = 0;
    if (node.depth != h + 1) {
      node.depth = h + 1;
      node.parent->hops = h;
      ++node.revision;
    }
  } else if ((!node.parent || h + 1 < node.depth) && !node.children.contains(sender) && h < 254) {
    detach_parent(node);
    node.parent = ParentInfo{sender, h, {}, node.nics.front().channel.value_or(0)};
    node.depth = h + 1;
    node.missed_beacons = 0;
    node.nics.front().mode = NicMode::associated;
    attach_parent_tunnel(node, sender);
    ++node.revision;
    out.parent_changed = true;
  } else {
    out.dropped = true;
    return out;
  }
  out.forward = codec::TrMessage{node.depth, node.parent->mac, node.mac};
  return out;
}

}  // namespace wifixdr
