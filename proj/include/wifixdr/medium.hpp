#pragma once

// Shared-medium model: 802.11a/g airtime per frame, per-channel conflict
// relation over the scenario graph, and the deterministic event queue.

#include <wifixdr/common.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace wifixdr {

struct AirtimeConstants {
  double slot_us = 9.0;
  double sifs_us = 16.0;
  double difs_us = 34.0;
  double mean_backoff_us = 67.5;  // CWmin(15) * slot / 2
  double plcp_us = 20.0;
  double data_rate_mbps = 54.0;
  double control_rate_mbps = 24.0;
  double ack_octets = 14.0;
  double mac_overhead_octets = 28.0;

  void validate() const {
    for (double v : {slot_us, sifs_us, difs_us, mean_backoff_us, plcp_us, data_rate_mbps, control_rate_mbps,
                     ack_octets, mac_overhead_octets}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("airtime constants must be strictly positive");
    }
  }
};

// DIFS + mean backoff + PLCP + data + SIFS + PLCP + ACK, in microseconds.
inline double airtime(std::size_t payload_octets, const AirtimeConstants& c) {
  const double data = 8.0 * (c.mac_overhead_octets + static_cast<double>(payload_octets)) / c.data_rate_mbps;
  const double ack = 8.0 * c.ack_octets / c.control_rate_mbps;
  return c.difs_us + c.mean_backoff_us + c.plcp_us + data + c.sifs_us + c.plcp_us + ack;
}

// Airtime on the integer microsecond clock (nearest microsecond).
inline Micros airtime_ticks(std::size_t payload_octets, const AirtimeConstants& c) {
  return static_cast<Micros>(std::llround(airtime(payload_octets, c)));
}

// ---------------------------------------------------------------------------
// Conflict relation
// ---------------------------------------------------------------------------

struct TxEndpoints {
  NodeId sender = 0;
  std::optional<NodeId> receiver;  // nullopt for broadcasts
  Channel channel = 0;
};

class ConflictGraph {
 public:
  ConflictGraph() = default;

  // `interference_hops` = 1 makes interference range equal adjacency range.
  ConflictGraph(int node_count, const std::vector<std::pair<NodeId, NodeId>>& edges, int interference_hops = 1)
      : n_(node_count), range_(interference_hops), adj_(static_cast<std::size_t>(node_count)) {
    if (interference_hops < 1) throw ConfigError("interference range must be at least one hop");
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n_ || b >= n_) throw ConfigError("edge endpoint out of range");
      if (a == b) continue;
      adj_[static_cast<std::size_t>(a)].push_back(b);
      adj_[static_cast<std::size_t>(b)].push_back(a);
    }
    dist_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), kUnreachable);
    for (NodeId s = 0; s < n_; ++s) {
      std::deque<NodeId> q{s};
      at(s, s) = 0;
      while (!q.empty()) {
        const NodeId u = q.front();
        q.pop_front();
        for (NodeId v : adj_[static_cast<std::size_t>(u)]) {
          if (at(s, v) == kUnreachable) {
            at(s, v) = at(s, u) + 1;
            q.push_back(v);
          }
        }
      }
    }
  }

  int node_count() const noexcept { return n_; }
  int interference_hops() const noexcept { return range_; }
  const std::vector<NodeId>& neighbors(NodeId n) const { return adj_.at(static_cast<std::size_t>(n)); }

  int hop_distance(NodeId a, NodeId b) const { return dist_.at(index(a, b)); }
  bool adjacent(NodeId a, NodeId b) const { return a != b && hop_distance(a, b) == 1; }

  // Equal nodes, or within interference range of each other.
  bool interferes(NodeId a, NodeId b) const {
    const int d = hop_distance(a, b);
    return d != kUnreachable && d <= range_;
  }

  bool conflicts(const TxEndpoints& a, const TxEndpoints& b) const {
    if (a.channel != b.channel) return false;
    NodeId ea[2]{a.sender, a.receiver.value_or(a.sender)};
    NodeId eb[2]{b.sender, b.receiver.value_or(b.sender)};
    for (NodeId x : ea) {
      for (NodeId y : eb) {
        if (interferes(x, y)) return true;
      }
    }
    return false;
  }

  static constexpr int kUnreachable = std::numeric_limits<int>::max();

 private:
  std::size_t index(NodeId a, NodeId b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b);
  }
  int& at(NodeId a, NodeId b) { return dist_[index(a, b)]; }

  int n_ = 0;
  int range_ = 1;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<int> dist_;
};

inline bool conflicts(const TxEndpoints& a, const TxEndpoints& b, const ConflictGraph& g) {
  return g.conflicts(a, b);
}

// ---------------------------------------------------------------------------
// Event queue
// ---------------------------------------------------------------------------

// Ordered by (time, rank, node, insertion sequence): identical inputs always
// pop in the same order.
template <typename Payload>
class EventQueue {
 public:
  struct Event {
    Micros time;
    int rank;
    NodeId node;
    std::uint64_t seq;
    Payload payload;
  };

  void push(Micros time, int rank, NodeId node, Payload payload) {
    heap_.push(Event{time, rank, node, next_seq_++, std::move(payload)});
  }

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }
  const Event& top() const { return heap_.top(); }

  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      if (a.rank != b.rank) return a.rank > b.rank;
      if (a.node != b.node) return a.node > b.node;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace wifixdr
