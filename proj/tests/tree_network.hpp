#pragma once

// Test support: enumerates small labeled trees, builds joined NodeStates on
// them, moves frames hop by hop without a medium, and provides an
// independent flood-then-learn bridge reference to compare against.

#include <wifixdr/forwarding.hpp>
#include <wifixdr/topology.hpp>

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <vector>

namespace wifixdr::testing {

inline MacAddress node_mac(int i) { return MacAddress::from_index(0x02, static_cast<std::uint32_t>(i + 1)); }
inline MacAddress host_mac(int i) { return MacAddress::from_index(0x0A, static_cast<std::uint32_t>(i + 1)); }

// Every labeled tree on n nodes, as parent arrays rooted at node 0
// (parent[0] = -1). Decoded from all Pruefer sequences.
inline std::vector<std::vector<int>> all_rooted_trees(int n) {
  std::vector<std::vector<int>> out;
  if (n == 1) {
    out.push_back({-1});
    return out;
  }
  if (n == 2) {
    out.push_back({-1, 0});
    return out;
  }
  std::vector<int> seq(static_cast<std::size_t>(n - 2), 0);
  for (;;) {
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int v : seq) ++degree[static_cast<std::size_t>(v)];
    std::vector<std::pair<int, int>> edges;
    for (int v : seq) {
      for (int leaf = 0; leaf < n; ++leaf) {
        if (degree[static_cast<std::size_t>(leaf)] == 1) {
          edges.emplace_back(leaf, v);
          --degree[static_cast<std::size_t>(leaf)];
          --degree[static_cast<std::size_t>(v)];
          break;
        }
      }
    }
    int u = -1;
    for (int v = 0; v < n; ++v) {
      if (degree[static_cast<std::size_t>(v)] == 1) {
        if (u < 0) u = v;
        else edges.emplace_back(u, v);
      }
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<int> parent(static_cast<std::size_t>(n), -2);
    parent[0] = -1;
    std::deque<int> q{0};
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (int y : adj[static_cast<std::size_t>(x)]) {
        if (parent[static_cast<std::size_t>(y)] == -2) {
          parent[static_cast<std::size_t>(y)] = x;
          q.push_back(y);
        }
      }
    }
    out.push_back(parent);
    int i = 0;
    while (i < n - 2 && ++seq[static_cast<std::size_t>(i)] == n) seq[static_cast<std::size_t>(i++)] = 0;
    if (i == n - 2) break;
  }
  return out;
}

// Per-frame observations from the protocol implementation.
struct Observation {
  std::multiset<int> delivered_to;  // nodes whose local host got the frame
  bool flooded = false;
  std::vector<std::pair<MacAddress, MacAddress>> hops;  // (outer_src, outer_dst)
  std::map<int, int> visits;
  bool inner_intact = true;
};

class TreeNetwork {
 public:
  explicit TreeNetwork(const std::vector<int>& parent, const ChannelPlan& plan = {}) : parent_(parent) {
    const int n = static_cast<int>(parent.size());
    nodes_.push_back(NodeState::gateway(0, node_mac(0), plan.band_24.front(), Band::ghz24));
    for (int i = 1; i < n; ++i) nodes_.push_back(NodeState::mesh_ap(i, node_mac(i)));
    // Join in BFS order so every parent is attached first.
    std::vector<int> order{0};
    for (std::size_t k = 0; k < order.size(); ++k) {
      for (int c = 1; c < n; ++c) {
        if (parent[static_cast<std::size_t>(c)] == order[k]) order.push_back(c);
      }
    }
    for (std::size_t k = 1; k < order.size(); ++k) {
      const int c = order[k];
      auto& p = nodes_[static_cast<std::size_t>(parent[static_cast<std::size_t>(c)])];
      auto b = *make_beacon(p, "t", 0);
      CandidateParent cand{b.bssid, b.hops, b.channel_list, b.tx_channel, -60, 0};
      join(nodes_[static_cast<std::size_t>(c)], cand, plan);
      on_station_associated(p, node_mac(c));
    }
  }

  NodeState& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  Observation send_from_host(int at, const codec::EthernetFrame& frame) {
    Observation obs;
    const Bytes original = frame.to_bytes();
    std::deque<std::pair<int, codec::Eo11Frame>> wire;
    struct Sink final : FrameSink {
      Sink(TreeNetwork& net, int self, std::deque<std::pair<int, codec::Eo11Frame>>& wire, Observation& obs)
          : net(net), self(self), wire(wire), obs(obs) {}
      bool transmit(int, codec::Eo11Frame f) override {
        wire.emplace_back(self, std::move(f));
        return true;
      }
      void deliver_local(const codec::EthernetFrame&) override { obs.delivered_to.insert(self); }
      TreeNetwork& net;
      int self;
      std::deque<std::pair<int, codec::Eo11Frame>>& wire;
      Observation& obs;
    };
    {
      Sink sink(*this, at, wire, obs);
      obs.visits[at]++;
      auto d = host_send(node(at), frame, sink, 0);
      obs.flooded |= d.flooded;
    }
    while (!wire.empty()) {
      auto [from, f] = std::move(wire.front());
      wire.pop_front();
      obs.hops.emplace_back(f.outer_src, f.outer_dst);
      if (f.inner.to_bytes() != original) obs.inner_intact = false;
      int to = -1;
      for (int i = 0; i < size(); ++i) {
        if (node_mac(i) == f.outer_dst) to = i;
      }
      if (to < 0) continue;
      Sink sink(*this, to, wire, obs);
      obs.visits[to]++;
      auto r = on_receive(node(to), f, sink, 0);
      obs.flooded |= r.decision.flooded;
    }
    // The GW's "infrastructure host" is the GW's local port.
    return obs;
  }

 private:
  std::vector<int> parent_;
  std::vector<NodeState> nodes_;
};

// Independent reference: plain learning switches wired as the tree, one host
// per node. Knows nothing about tunnels, NICs or encapsulation.
class ReferenceBridges {
 public:
  explicit ReferenceBridges(const std::vector<int>& parent) : n_(static_cast<int>(parent.size())) {
    adj_.resize(static_cast<std::size_t>(n_));
    for (int c = 1; c < n_; ++c) {
      adj_[static_cast<std::size_t>(c)].push_back(parent[static_cast<std::size_t>(c)]);
      adj_[static_cast<std::size_t>(parent[static_cast<std::size_t>(c)])].push_back(c);
    }
    tables_.resize(static_cast<std::size_t>(n_));
  }

  // Port -1 is the local host; other ports are neighbor node ids.
  Observation send(int at, const MacAddress& src, const MacAddress& dst) {
    Observation obs;
    std::deque<std::pair<int, int>> work{{at, -1}};  // (node, ingress)
    while (!work.empty()) {
      auto [x, in] = work.front();
      work.pop_front();
      obs.visits[x]++;
      auto& table = tables_[static_cast<std::size_t>(x)];
      if (!src.is_group()) table[src] = in;
      std::vector<int> out;
      auto it = dst.is_group() ? table.end() : table.find(dst);
      if (it != table.end()) {
        if (it->second != in) out.push_back(it->second);
      } else {
        obs.flooded = true;
        out.push_back(-1);
        for (int y : adj_[static_cast<std::size_t>(x)]) out.push_back(y);
        std::erase(out, in);
      }
      for (int p : out) {
        if (p == -1) obs.delivered_to.insert(x);
        else work.emplace_back(p, x);
      }
    }
    return obs;
  }

 private:
  int n_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::map<MacAddress, int>> tables_;
};

}  // namespace wifixdr::testing
