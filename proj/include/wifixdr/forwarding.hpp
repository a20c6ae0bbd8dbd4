#pragma once

// Layer-2 data plane: bridge decisions, binary NIC selection and Eo11
// encapsulation over the node's tunnels.

#include <wifixdr/bridge.hpp>
#include <wifixdr/frame_codec.hpp>
#include <wifixdr/topology.hpp>

#include <string>

namespace wifixdr {

// Where the data plane hands frames off: NIC transmit queues and the local
// host. transmit() returns false when the NIC queue is full.
class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual bool transmit(int nic, codec::Eo11Frame frame) = 0;
  virtual void deliver_local(const codec::EthernetFrame& frame) = 0;
};

inline ForwardDecision bridge_ingress(NodeState& node, PortId port, const codec::EthernetFrame& inner, Micros now) {
  return node.bridge.ingress(port, inner, now);
}

// Parent tunnel -> UP-NIC, child tunnel -> DOWN-NIC; single-NIC nodes use
// their only interface.
inline int select_nic(const NodeState& node, const PortBinding& port) {
  if (port.kind != PortKind::tunnel) throw ContractViolation("select_nic: not a tunnel port");
  const bool is_parent = node.parent && node.parent->mac == port.peer;
  const bool is_child = node.children.contains(port.peer);
  if (!is_parent && !is_child) {
    throw ConsistencyError("select_nic: tunnel peer " + port.peer.to_string() + " is neither parent nor child");
  }
  if (node.nics.size() == 1) return 0;
  const int nic = is_parent ? node.up_nic() : node.down_nic();
  if (nic < 0) throw ConsistencyError("select_nic: no NIC configured for " + port.peer.to_string());
  return nic;
}

inline bool send_over_tunnel(NodeState& node, PortId port, const codec::EthernetFrame& inner, FrameSink& sink) {
  const PortBinding* binding = node.bridge.port(port);
  if (binding == nullptr || binding->kind != PortKind::tunnel) {
    throw ContractViolation("send_over_tunnel: port " + std::to_string(port) + " is not a tunnel");
  }
  const int nic = select_nic(node, *binding);
  if (!sink.transmit(nic, codec::encode_eo11(inner, binding->peer, node.mac))) {
    ++node.counters.dropped;
    return false;
  }
  ++node.counters.tx;
  return true;
}

// Carries out a bridge decision. Returns the number of tunnel copies queued.
inline int dispatch(NodeState& node, const ForwardDecision& decision, const codec::EthernetFrame& inner,
                    FrameSink& sink) {
  if (decision.flooded) ++node.counters.flooded;
  int sent = 0;
  for (PortId p : decision.egress) {
    if (p == kLocalHostPort) {
      ++node.counters.delivered_local;
      sink.deliver_local(inner);
    } else if (send_over_tunnel(node, p, inner, sink)) {
      ++sent;
    }
  }
  return sent;
}

// Frame from the attached host (or the GW's infrastructure host).
inline ForwardDecision host_send(NodeState& node, const codec::EthernetFrame& inner, FrameSink& sink, Micros now) {
  auto d = bridge_ingress(node, kLocalHostPort, inner, now);
  dispatch(node, d, inner, sink);
  return d;
}

enum class ReceiveStatus : std::uint8_t { accepted, not_for_us, bad_ethertype, no_tunnel };

struct ReceiveResult {
  ReceiveStatus status = ReceiveStatus::accepted;
  ForwardDecision decision;
  int relayed_copies = 0;
};

inline ReceiveResult on_receive(NodeState& node, const codec::Eo11Frame& outer, FrameSink& sink, Micros now) {
  ReceiveResult r;
  if (outer.outer_dst != node.mac) {
    r.status = ReceiveStatus::not_for_us;
    return r;
  }
  if (outer.outer_ethertype != codec::kEo11Ethertype) {
    r.status = ReceiveStatus::bad_ethertype;
    return r;
  }
  auto it = node.tunnels.find(outer.outer_src);
  if (it == node.tunnels.end()) {
    ++node.counters.dropped;
    node.diagnostics.push_back("frame from " + outer.outer_src.to_string() + " without a tunnel dropped");
    r.status = ReceiveStatus::no_tunnel;
    return r;
  }
  ++node.counters.rx;
  r.decision = bridge_ingress(node, it->second.port, outer.inner, now);
  r.relayed_copies = dispatch(node, r.decision, outer.inner, sink);
  if (r.relayed_copies > 0) ++node.counters.relayed;
  return r;
}

}  // namespace wifixdr
