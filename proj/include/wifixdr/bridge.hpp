#pragma once

// 802.1D-style learning bridge: one port for the local host and one per
// Eo11 tunnel endpoint.

#include <wifixdr/common.hpp>
#include <wifixdr/frame_codec.hpp>

#include <map>
#include <optional>
#include <vector>

namespace wifixdr {

using PortId = int;

inline constexpr PortId kLocalHostPort = 0;
inline constexpr Micros kDefaultBridgeAging = 300 * kMicrosPerSecond;

enum class PortKind : std::uint8_t { local_host, tunnel };

// Which side of the tree a tunnel port faces.
enum class TunnelRole : std::uint8_t { none, parent, child };

struct PortBinding {
  PortId id = kLocalHostPort;
  PortKind kind = PortKind::local_host;
  MacAddress peer;  // tunnel peer (unused for the local host port)
  TunnelRole role = TunnelRole::none;
};

struct ForwardDecision {
  std::vector<PortId> egress;
  bool flooded = false;
};

class BridgeTable {
 public:
  struct Entry {
    PortId port;
    Micros last_seen;
  };

  explicit BridgeTable(Micros aging = kDefaultBridgeAging) : aging_(aging) {
    ports_.emplace(kLocalHostPort, PortBinding{});
  }

  PortId add_tunnel_port(const MacAddress& peer, TunnelRole role) {
    const PortId id = next_port_++;
    ports_.emplace(id, PortBinding{id, PortKind::tunnel, peer, role});
    return id;
  }

  // Removes a port and every address learned on it.
  bool remove_port(PortId id) {
    if (id == kLocalHostPort || ports_.erase(id) == 0) return false;
    std::erase_if(entries_, [id](const auto& kv) { return kv.second.port == id; });
    return true;
  }

  const PortBinding* port(PortId id) const {
    auto it = ports_.find(id);
    return it == ports_.end() ? nullptr : &it->second;
  }

  const std::map<PortId, PortBinding>& ports() const noexcept { return ports_; }
  const std::map<MacAddress, Entry>& entries() const noexcept { return entries_; }
  Micros aging() const noexcept { return aging_; }

  void learn(const MacAddress& mac, PortId port, Micros now) {
    if (mac.is_group() || !ports_.contains(port)) return;
    entries_[mac] = Entry{port, now};
  }

  // nullopt means "flood": unknown, or aged out (the stale entry is dropped).
  std::optional<PortId> lookup(const MacAddress& mac, Micros now) {
    auto it = entries_.find(mac);
    if (it == entries_.end()) return std::nullopt;
    if (now - it->second.last_seen > aging_) {
      entries_.erase(it);
      return std::nullopt;
    }
    return it->second.port;
  }

  // Learn the source on `ingress`, then pick egress ports for the destination.
  ForwardDecision ingress(PortId ingress, const codec::EthernetFrame& frame, Micros now) {
    learn(frame.src, ingress, now);
    ForwardDecision d;
    std::optional<PortId> known;
    if (!frame.dst.is_group()) known = lookup(frame.dst, now);
    if (known) {
      if (*known != ingress) d.egress.push_back(*known);
      return d;
    }
    d.flooded = true;
    for (const auto& [id, binding] : ports_) {
      if (id != ingress) d.egress.push_back(id);
    }
    return d;
  }

 private:
  Micros aging_;
  PortId next_port_ = kLocalHostPort + 1;
  std::map<PortId, PortBinding> ports_;
  std::map<MacAddress, Entry> entries_;
};

}  // namespace wifixdr
