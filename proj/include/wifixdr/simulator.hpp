#pragma once

// Deterministic discrete-event simulation of a WiFIX-DR (dual-radio) or
// WiFIX (single-radio) stub mesh over an idealized shared medium.
//
// Medium model: a transmission occupies airtime(frame) on its channel and
// blocks every conflicting transmission (same channel, endpoints within
// interference range). Whenever the medium state changes, idle NICs are
// started greedily in priority order: management frames first, then the
// oldest head-of-line frame, then lowest node id. There is no collision
// loss; contention shows up as serialized airtime and queue growth.

#include <wifixdr/channel_assign.hpp>
#include <wifixdr/common.hpp>
#include <wifixdr/forwarding.hpp>
#include <wifixdr/frame_codec.hpp>
#include <wifixdr/medium.hpp>
#include <wifixdr/scenario.hpp>
#include <wifixdr/topology.hpp>

#include <cstdint>
#include <deque>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace wifixdr {

inline constexpr std::uint16_t kIpv4Ethertype = 0x0800;
inline constexpr std::uint16_t kArpEthertype = 0x0806;
// IPv4 + UDP headers carried inside the inner Ethernet frame.
inline constexpr std::size_t kIpUdpOverhead = 28;

enum class FrameKind : std::uint8_t { beacon, tr, data };

enum class TraceKind : std::uint8_t { beacon_due, tx_start, tx_end, deliver, app_arrival, node_up, node_down };

inline std::string_view to_string(TraceKind k) noexcept {
  switch (k) {
    case TraceKind::beacon_due: return "beacon-due";
    case TraceKind::tx_start: return "tx-start";
    case TraceKind::tx_end: return "tx-end";
    case TraceKind::deliver: return "deliver";
    case TraceKind::app_arrival: return "app-arrival";
    case TraceKind::node_up: return "node-up";
    case TraceKind::node_down: return "node-down";
  }
  return "?";
}

struct TraceRecord {
  Micros time = 0;
  TraceKind kind = TraceKind::beacon_due;
  NodeId node = 0;
  int nic = -1;
  Channel channel = 0;
  std::optional<FrameKind> frame_kind;
  std::uint64_t frame_id = 0;
};

// One completed or in-progress transmission on the medium.
struct AirtimeRecord {
  Micros start = 0;
  Micros end = 0;
  TxEndpoints endpoints;
  int nic = 0;
  FrameKind kind = FrameKind::data;
};

struct FrameRecord {
  std::uint64_t frame_id = 0;
  int flow = -1;
  NodeId src = 0;
  Micros enqueued = 0;
  Micros first_tx = -1;
  Micros delivered = -1;
  bool dropped = false;
  int copies_in_flight = 0;
  std::vector<NodeId> path;

  bool is_delivered() const noexcept { return delivered >= 0; }
};

struct SimOptions {
  bool record_trace = false;
  bool record_airtime = false;
  bool record_paths = false;
};

class Simulator {
 public:
  Simulator(ScenarioConfig cfg, std::uint64_t seed, SimOptions opts = {})
      : cfg_(std::move(cfg)), opts_(opts), rng_(seed) {
    if (auto issues = validate_scenario(cfg_); !issues.empty()) {
      throw ConfigError("invalid scenario:\n" + format_issues(issues));
    }
    const int n = static_cast<int>(cfg_.nodes.size());
    graph_ = ConflictGraph(n, cfg_.edge_pairs(), cfg_.constants.interference_hops);
    gw_ = cfg_.gateway();
    network_channel_ = gw_select_channel(cfg_.plan, cfg_.gw_band, cfg_.gw_channel);
    nodes_.resize(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) {
      mac_to_node_[spec(i).mac] = i;
      reset_node(i);
    }
    for (NodeId i = 0; i < n; ++i) start_node_timers(i, 0);
  }

  // ---- driving -----------------------------------------------------------

  void run_until(Micros until) {
    while (!queue_.empty() && queue_.top().time <= until) {
      const Micros t = queue_.top().time;
      now_ = t;
      while (!queue_.empty() && queue_.top().time == t) {
        auto ev = queue_.pop();
        handle(ev);
      }
      arbitrate();
      note_topology_revision();
    }
    now_ = std::max(now_, until);
  }

  Micros now() const noexcept { return now_; }

  void schedule_node_down(NodeId n, Micros at) { push(at, NodeDownEv{}, n); }
  void schedule_node_up(NodeId n, Micros at) { push(at, NodeUpEv{}, n); }

  // A frame handed to `node`'s bridge by its attached host at time `at`.
  void inject_host_frame(NodeId node, codec::EthernetFrame frame, Micros at) {
    push(at, HostFrameEv{std::move(frame)}, node);
  }

  // The GW-side host announces itself with a broadcast so that every bridge
  // learns the path toward it (stands in for ARP resolution).
  void prime_bridges(Micros at) {
    codec::EthernetFrame f;
    f.dst = MacAddress::broadcast();
    f.src = spec(gw_).host_mac;
    f.ethertype = kArpEthertype;
    f.payload.assign(28, 0);
    inject_host_frame(gw_, std::move(f), at);
  }

  // Schedules constant-bit-rate arrivals for every flow. Flow start/stop are
  // relative to `window_start`; arrivals stop at `window_end`.
  void start_traffic(Micros window_start, Micros window_end) {
    window_start_ = window_start;
    window_end_ = window_end;
    flow_state_.clear();
    for (std::size_t k = 0; k < cfg_.flows.size(); ++k) {
      const auto& f = cfg_.flows[k];
      FlowState st;
      st.start = window_start + static_cast<Micros>(std::llround(f.start_s * kMicrosPerSecond));
      const double stop_s = f.stop_s.value_or(cfg_.duration_s);
      st.stop = std::min(window_end, window_start + static_cast<Micros>(std::llround(stop_s * kMicrosPerSecond)));
      st.interval_us = f.rate_mbps > 0.0 ? 8.0 * static_cast<double>(f.packet_size) / f.rate_mbps : 0.0;
      st.phase = st.interval_us > 0.0 ? static_cast<Micros>(draw(static_cast<std::uint64_t>(st.interval_us) + 1)) : 0;
      flow_state_.push_back(st);
      if (f.rate_mbps > 0.0) {
        const Micros first = st.start + st.phase;
        if (first < st.stop) push(first, AppArrivalEv{static_cast<int>(k), 0}, f.src);
      }
    }
    for (const auto& ev : cfg_.events) {
      const Micros at = window_start + static_cast<Micros>(std::llround(ev.at_s * kMicrosPerSecond));
      if (ev.kind == NodeEventSpec::Kind::down) schedule_node_down(ev.node, at);
      else schedule_node_up(ev.node, at);
    }
  }

  // ---- state -------------------------------------------------------------

  const ScenarioConfig& config() const noexcept { return cfg_; }
  const ConflictGraph& graph() const noexcept { return graph_; }
  NodeId gateway() const noexcept { return gw_; }
  Channel network_channel() const noexcept { return network_channel_; }
  const NodeState& node(NodeId n) const { return rt(n).state; }
  bool is_up(NodeId n) const { return rt(n).up; }
  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
  std::optional<NodeId> node_by_mac(const MacAddress& mac) const {
    auto it = mac_to_node_.find(mac);
    if (it == mac_to_node_.end()) return std::nullopt;
    return it->second;
  }

  Micros last_topology_change() const noexcept { return last_change_; }

  Micros quiet_period() const noexcept {
    const Micros beacons = cfg_.constants.convergence_quiet_intervals * cfg_.constants.topology.beacon_interval;
    if (cfg_.mode == RadioMode::single) return std::max(beacons, 2 * cfg_.constants.topology.tr_period);
    return beacons;
  }

  bool all_attached() const {
    for (const auto& r : nodes_) {
      if (!r.up || r.state.is_gw) continue;
      if (!r.state.parent || r.state.pending_parent) return false;
    }
    return true;
  }

  bool converged() const { return all_attached() && now_ - last_change_ >= quiet_period(); }

  std::size_t queue_length(NodeId n, int nic) const {
    return rt(n).nics.at(static_cast<std::size_t>(nic)).data.size();
  }

  const std::vector<FrameRecord>& frames() const noexcept { return frames_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }
  const std::vector<AirtimeRecord>& airtime_log() const noexcept { return airtime_log_; }
  std::uint64_t tr_frames_sent() const noexcept { return tr_sent_; }
  std::uint64_t beacons_sent() const noexcept { return beacons_sent_; }
  Micros window_start() const noexcept { return window_start_; }
  Micros window_end() const noexcept { return window_end_; }

  std::string format_trace_record(const TraceRecord& r) const {
    std::ostringstream os;
    os << r.time << '\t' << to_string(r.kind) << '\t' << spec(r.node).name << '\t';
    if (r.nic >= 0) os << r.nic;
    else os << '-';
    os << '\t';
    if (r.channel > 0) os << r.channel;
    else os << '-';
    os << '\t';
    if (r.frame_kind) {
      static constexpr const char* tags[] = {"bcn", "tr", "data"};
      os << tags[static_cast<int>(*r.frame_kind)] << ':' << r.frame_id;
    } else {
      os << '-';
    }
    return os.str();
  }

  std::string trace_text() const {
    std::string out;
    for (const auto& r : trace_) {
      out += format_trace_record(r);
      out += '\n';
    }
    return out;
  }

 private:
  // ---- events --------------------------------------------------------------

  struct NodeDownEv {};
  struct NodeUpEv {};
  struct TxEndEv { int nic; std::uint64_t tx_id; };
  struct AssocCompleteEv { std::uint64_t epoch; };
  struct StationTimeoutEv { MacAddress station; };
  struct ScanDecisionEv { std::uint64_t epoch; };
  struct TickEv { std::uint64_t epoch; std::uint64_t seq; };
  struct BeaconDueEv { std::uint64_t epoch; };
  struct TrDueEv { std::uint64_t epoch; };
  struct HostFrameEv { codec::EthernetFrame frame; };
  struct AppArrivalEv { int flow; std::uint64_t seq; };

  using Payload = std::variant<NodeDownEv, NodeUpEv, TxEndEv, AssocCompleteEv, StationTimeoutEv, ScanDecisionEv,
                               TickEv, BeaconDueEv, TrDueEv, HostFrameEv, AppArrivalEv>;

  // Same-time ordering: failures, then completions, then protocol timers,
  // then new traffic.
  static int rank_of(const Payload& p) { return static_cast<int>(p.index()); }

  void push(Micros at, Payload p, NodeId node) {
    const int rank = rank_of(p);
    queue_.push(at, rank, node, std::move(p));
  }

  struct Pending {
    FrameKind kind = FrameKind::data;
    Micros enqueued = 0;
    std::uint64_t frame_id = 0;
    codec::Eo11Frame frame;
    Bytes body;
    std::size_t air_octets = 0;
    std::optional<NodeId> receiver;
  };

  struct NicRuntime {
    std::deque<Pending> data;
    std::deque<Pending> mgmt;
    bool busy = false;
    std::uint64_t tx_id = 0;
    Pending in_flight;
    Micros tx_start = 0;
    Channel tx_channel = 0;
  };

  struct NodeRuntime {
    NodeState state;
    std::vector<NicRuntime> nics;
    bool up = true;
    std::uint64_t epoch = 0;  // bumped on reboot; stale timers are ignored
    bool scan_pending = false;
    bool beacon_chain = false;
    std::uint64_t loss_seq = 0;  // only the newest loss timer counts
  };

  struct FlowState {
    Micros start = 0;
    Micros stop = 0;
    double interval_us = 0.0;
    Micros phase = 0;
  };

  class Sink final : public FrameSink {
   public:
    Sink(Simulator& sim, NodeId node) : sim_(sim), node_(node) {}
    bool transmit(int nic, codec::Eo11Frame frame) override { return sim_.enqueue_data(node_, nic, std::move(frame)); }
    void deliver_local(const codec::EthernetFrame& frame) override { sim_.host_receive(node_, frame); }

   private:
    Simulator& sim_;
    NodeId node_;
  };

  // ---- helpers -------------------------------------------------------------

  const NodeSpec& spec(NodeId n) const { return cfg_.nodes.at(static_cast<std::size_t>(n)); }
  NodeRuntime& rt(NodeId n) { return nodes_.at(static_cast<std::size_t>(n)); }
  const NodeRuntime& rt(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)); }
  const TopologyConfig& topo_cfg() const { return cfg_.constants.topology; }

  std::uint64_t draw(std::uint64_t bound) {
    if (bound == 0) return 0;
    return rng_() % bound;
  }

  void trace(TraceKind kind, NodeId node, int nic, Channel ch, std::optional<FrameKind> fk = std::nullopt,
             std::uint64_t id = 0) {
    if (!opts_.record_trace) return;
    trace_.push_back(TraceRecord{now_, kind, node, nic, ch, fk, id});
  }

  void reset_node(NodeId i) {
    auto& r = rt(i);
    const auto& s = spec(i);
    const std::uint64_t epoch = r.epoch + 1;
    if (s.is_gw) {
      const Band band = cfg_.plan.band_of(network_channel_).value_or(cfg_.gw_band);
      r.state = NodeState::gateway(i, s.mac, network_channel_, band, cfg_.mode);
    } else {
      r.state = NodeState::mesh_ap(i, s.mac, cfg_.mode);
      if (cfg_.mode == RadioMode::single) {
        r.state.nics.front().channel = network_channel_;
        r.state.nics.front().band = cfg_.plan.band_of(network_channel_).value_or(Band::ghz24);
      }
    }
    r.state.bridge = BridgeTable(cfg_.constants.bridge_aging);
    r.nics.assign(r.state.nics.size(), NicRuntime{});
    r.epoch = epoch;
    r.scan_pending = false;
    r.beacon_chain = false;
  }

  void start_node_timers(NodeId i, Micros base) {
    auto& r = rt(i);
    if (cfg_.mode == RadioMode::dual) {
      if (r.state.is_gw) start_beacon_chain(i, base);
    } else {
      const Micros period = topo_cfg().tr_period;
      if (r.state.is_gw) {
        push(base + static_cast<Micros>(draw(static_cast<std::uint64_t>(period))), TrDueEv{r.epoch}, i);
      }
    }
  }

  void start_beacon_chain(NodeId i, Micros base) {
    auto& r = rt(i);
    if (r.beacon_chain) return;
    r.beacon_chain = true;
    const Micros interval = topo_cfg().beacon_interval;
    push(base + static_cast<Micros>(draw(static_cast<std::uint64_t>(interval))), BeaconDueEv{r.epoch}, i);
  }

  FrameRecord* record_for(const codec::EthernetFrame& inner) {
    if (inner.ethertype != kIpv4Ethertype || inner.payload.size() < 8) return nullptr;
    std::uint64_t id = 0;
    for (int b = 0; b < 8; ++b) id = (id << 8) | inner.payload[static_cast<std::size_t>(b)];
    if (id == 0 || id > frames_.size()) return nullptr;
    return &frames_[id - 1];
  }

  void copy_finished(FrameRecord* rec) {
    if (!rec) return;
    if (--rec->copies_in_flight == 0 && !rec->is_delivered()) rec->dropped = true;
  }

  bool enqueue_data(NodeId n, int nic, codec::Eo11Frame frame) {
    auto& r = rt(n);
    auto& q = r.nics.at(static_cast<std::size_t>(nic));
    if (q.data.size() >= cfg_.constants.queue_limit) return false;
    Pending p;
    p.kind = FrameKind::data;
    p.enqueued = now_;
    p.receiver = node_by_mac(frame.outer_dst);
    p.air_octets = frame.inner.size();
    if (auto* rec = record_for(frame.inner)) {
      p.frame_id = rec->frame_id;
      ++rec->copies_in_flight;
    }
    p.frame = std::move(frame);
    q.data.push_back(std::move(p));
    return true;
  }

  void enqueue_mgmt(NodeId n, int nic, FrameKind kind, Bytes body, std::uint64_t id) {
    Pending p;
    p.kind = kind;
    p.enqueued = now_;
    p.frame_id = id;
    p.air_octets = body.size();
    p.body = std::move(body);
    rt(n).nics.at(static_cast<std::size_t>(nic)).mgmt.push_back(std::move(p));
  }

  void host_receive(NodeId n, const codec::EthernetFrame& frame) {
    if (n != gw_ || frame.dst != spec(gw_).host_mac) return;
    if (auto* rec = record_for(frame); rec && !rec->is_delivered()) {
      rec->delivered = now_;
      rec->dropped = false;
    }
  }

  // Starts a fresh app frame (or any host frame) into node n's bridge.
  void host_send_tracked(NodeId n, const codec::EthernetFrame& frame, FrameRecord* rec) {
    Sink sink(*this, n);
    if (rec) ++rec->copies_in_flight;  // held while dispatching
    host_send(rt(n).state, frame, sink, now_);
    copy_finished(rec);
  }

  // ---- event handlers ------------------------------------------------------

  void handle(EventQueue<Payload>::Event& ev) {
    const NodeId n = ev.node;
    std::visit([&](auto& p) { on_event(n, p); }, ev.payload);
  }

  void on_event(NodeId n, NodeDownEv&) {
    auto& r = rt(n);
    if (!r.up) return;
    trace(TraceKind::node_down, n, -1, 0);
    r.up = false;
    for (auto& q : r.nics) {
      for (auto& p : q.data) copy_finished(record_for(p.frame.inner));
      q.data.clear();
      q.mgmt.clear();
    }
    // The former parent's AP notices the silent station after the usual
    // beacon-loss window.
    if (r.state.parent) {
      if (auto p = node_by_mac(r.state.parent->mac)) {
        push(now_ + topo_cfg().beacon_loss_threshold * topo_cfg().beacon_interval, StationTimeoutEv{spec(n).mac},
             *p);
      }
    }
  }

  void on_event(NodeId n, NodeUpEv&) {
    auto& r = rt(n);
    if (r.up) return;
    trace(TraceKind::node_up, n, -1, 0);
    for (auto& q : r.nics) {
      if (q.busy) copy_finished(record_for(q.in_flight.frame.inner));
    }
    reset_node(n);
    r.up = true;
    start_node_timers(n, now_);
  }

  void on_event(NodeId n, StationTimeoutEv& ev) {
    auto& st = rt(n).state;
    if (!rt(n).up) return;
    if (st.children.contains(ev.station)) {
      auto child = node_by_mac(ev.station);
      if (!child || !rt(*child).up || !rt(*child).state.parent || rt(*child).state.parent->mac != st.mac) {
        on_station_lost(st, ev.station);
      }
    }
  }

  Micros loss_period() const {
    return cfg_.mode == RadioMode::dual ? topo_cfg().beacon_interval : topo_cfg().tr_period;
  }

  // Loss ticks run one period after each frame heard from the parent, plus a
  // little grace for a beacon held behind an ongoing transmission.
  void rearm_loss_timer(NodeId n) {
    auto& r = rt(n);
    const Micros period = loss_period();
    push(now_ + period + period / 50, TickEv{r.epoch, ++r.loss_seq}, n);
  }

  void on_event(NodeId n, TickEv& ev) {
    auto& r = rt(n);
    if (!r.up || ev.epoch != r.epoch || ev.seq != r.loss_seq || !r.state.parent) return;
    push(now_ + loss_period(), TickEv{r.epoch, r.loss_seq}, n);
    if (on_beacon_interval_tick(r.state, topo_cfg())) parent_lost(n);
  }

  void parent_lost(NodeId n) {
    auto& st = rt(n).state;
    auto old = on_parent_lost(st);
    if (old) notify_station_lost(*old, st.mac);
  }

  void notify_station_lost(const MacAddress& parent_mac, const MacAddress& child_mac) {
    if (auto p = node_by_mac(parent_mac); p && rt(*p).up) {
      if (rt(*p).state.children.contains(child_mac)) on_station_lost(rt(*p).state, child_mac);
    }
  }

  void on_event(NodeId n, BeaconDueEv& ev) {
    auto& r = rt(n);
    if (!r.up || ev.epoch != r.epoch) return;
    push(now_ + topo_cfg().beacon_interval, BeaconDueEv{r.epoch}, n);
    auto beacon = make_beacon(r.state, cfg_.ssid, now_);
    if (!beacon) return;
    const int nic = r.state.is_gw ? 0 : r.state.down_nic();
    trace(TraceKind::beacon_due, n, nic, beacon->tx_channel);
    const auto interval_tu = static_cast<std::uint16_t>(std::min<Micros>(65535, topo_cfg().beacon_interval / 1024));
    auto body = codec::encode_beacon_body(*beacon, interval_tu);
    if (!body) throw ConsistencyError("own beacon failed to encode: " + body.error().message());
    enqueue_mgmt(n, nic, FrameKind::beacon, std::move(*body), ++beacon_ids_);
  }

  void on_event(NodeId n, TrDueEv& ev) {
    auto& r = rt(n);
    if (!r.up || ev.epoch != r.epoch) return;
    push(now_ + topo_cfg().tr_period, TrDueEv{r.epoch}, n);
    codec::TrMessage tr{0, r.state.mac, r.state.mac};
    enqueue_mgmt(n, 0, FrameKind::tr, *codec::encode_tr(tr), ++tr_ids_);
  }

  void on_event(NodeId n, ScanDecisionEv& ev) {
    auto& r = rt(n);
    if (ev.epoch != r.epoch) return;
    r.scan_pending = false;
    if (!r.up || r.state.attached() || r.state.pending_parent) return;
    try_join(n);
  }

  void try_join(NodeId n) {
    auto& st = rt(n).state;
    evict_stale_candidates(st, now_, topo_cfg());
    std::erase_if(st.candidates, [&](const auto& kv) { return !cfg_.plan.contains(kv.second.tx_channel); });
    auto choice = select_parent(st.candidates);
    if (!choice) return;
    begin_association(st, *choice, cfg_.plan);
    push(now_ + topo_cfg().association_latency, AssocCompleteEv{rt(n).epoch}, n);
  }

  void on_event(NodeId n, AssocCompleteEv& ev) {
    auto& r = rt(n);
    if (!r.up || ev.epoch != r.epoch || !r.state.pending_parent) return;
    const auto target = *r.state.pending_parent;
    auto p = node_by_mac(target.bssid);
    const bool reachable = p && rt(*p).up && graph_.adjacent(n, *p) &&
                           rt(*p).state.ap_channel() == std::optional<Channel>(target.tx_channel) &&
                           rt(*p).state.attached();
    if (!reachable) {
      association_failed(r.state);
      if (!r.state.candidates.empty()) schedule_scan(n);
      return;
    }
    const JoinResult jr = complete_association(r.state, cfg_.plan);
    if (jr.down_reconfigured) {
      for (const auto& child : deauthenticate_children(r.state)) {
        if (auto c = node_by_mac(child); c && rt(*c).up) {
          auto& cs = rt(*c).state;
          if (cs.parent && cs.parent->mac == r.state.mac) on_parent_lost(cs);
        }
      }
    }
    on_station_associated(rt(*p).state, r.state.mac);
    rearm_loss_timer(n);
    start_beacon_chain(n, now_);
  }

  void schedule_scan(NodeId n) {
    auto& r = rt(n);
    if (r.scan_pending) return;
    r.scan_pending = true;
    push(now_ + cfg_.constants.scan_window, ScanDecisionEv{r.epoch}, n);
  }

  void on_event(NodeId n, HostFrameEv& ev) {
    if (!rt(n).up) return;
    host_send_tracked(n, ev.frame, nullptr);
  }

  void on_event(NodeId n, AppArrivalEv& ev) {
    const auto& f = cfg_.flows.at(static_cast<std::size_t>(ev.flow));
    const auto& st = flow_state_.at(static_cast<std::size_t>(ev.flow));
    const Micros next = st.start + st.phase +
                        static_cast<Micros>(std::llround(static_cast<double>(ev.seq + 1) * st.interval_us));
    if (next < st.stop) push(next, AppArrivalEv{ev.flow, ev.seq + 1}, n);

    FrameRecord rec;
    rec.frame_id = frames_.size() + 1;
    rec.flow = ev.flow;
    rec.src = n;
    rec.enqueued = now_;
    if (opts_.record_paths) rec.path.push_back(n);
    frames_.push_back(std::move(rec));
    FrameRecord* r = &frames_.back();
    trace(TraceKind::app_arrival, n, -1, 0, FrameKind::data, r->frame_id);

    if (!rt(n).up) {
      r->dropped = true;
      return;
    }
    codec::EthernetFrame frame;
    frame.dst = spec(gw_).host_mac;
    frame.src = spec(n).host_mac;
    frame.ethertype = kIpv4Ethertype;
    frame.payload.assign(f.packet_size + kIpUdpOverhead, 0);
    for (int b = 0; b < 8; ++b) {
      frame.payload[static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(r->frame_id >> (8 * (7 - b)));
    }
    host_send_tracked(n, frame, r);
  }

  void on_event(NodeId n, TxEndEv& ev) {
    auto& r = rt(n);
    auto& q = r.nics.at(static_cast<std::size_t>(ev.nic));
    if (!q.busy || q.tx_id != ev.tx_id) return;
    q.busy = false;
    Pending p = std::move(q.in_flight);
    const Channel ch = q.tx_channel;
    trace(TraceKind::tx_end, n, ev.nic, ch, p.kind, p.frame_id);
    std::erase_if(ongoing_, [&](const Ongoing& o) { return o.node == n && o.nic == ev.nic; });

    if (!r.up) {
      if (p.kind == FrameKind::data) copy_finished(record_for(p.frame.inner));
      return;
    }
    switch (p.kind) {
      case FrameKind::beacon: deliver_beacon(n, ch, p); break;
      case FrameKind::tr: deliver_tr(n, ch, p); break;
      case FrameKind::data: deliver_data(n, ch, p); break;
    }
  }

  void deliver_beacon(NodeId sender, Channel ch, const Pending& p) {
    for (NodeId m : graph_.neighbors(sender)) {
      auto& r = rt(m);
      if (!r.up) continue;
      trace(TraceKind::deliver, m, -1, ch, FrameKind::beacon, p.frame_id);
      const BeaconEffect eff =
          on_beacon_frame(r.state, spec(sender).mac, p.body, cfg_.rssi(sender, m), now_, topo_cfg());
      if (eff == BeaconEffect::ignored || r.state.is_gw) continue;
      if (eff == BeaconEffect::parent_refreshed || eff == BeaconEffect::parent_changed) rearm_loss_timer(m);
      if (!r.state.attached()) {
        if (!r.state.pending_parent) schedule_scan(m);
        continue;
      }
      if (r.state.pending_parent || eff == BeaconEffect::parent_refreshed || eff == BeaconEffect::parent_changed) {
        continue;
      }
      const auto& cand = r.state.candidates.at(spec(sender).mac);
      if (prefers_reparent(r.state, cand) && cfg_.plan.contains(cand.tx_channel)) {
        auto old = detach_parent(r.state);
        if (old) notify_station_lost(*old, r.state.mac);
        begin_association(r.state, cand, cfg_.plan);
        push(now_ + topo_cfg().association_latency, AssocCompleteEv{r.epoch}, m);
      }
    }
  }

  void deliver_tr(NodeId sender, Channel ch, const Pending& p) {
    auto tr = codec::decode_tr(p.body);
    if (!tr) return;
    for (NodeId m : graph_.neighbors(sender)) {
      auto& r = rt(m);
      if (!r.up) continue;
      trace(TraceKind::deliver, m, 0, ch, FrameKind::tr, p.frame_id);
      const TrOutcome out = baseline_on_tr(r.state, *tr);
      if (r.state.parent && r.state.parent->mac == tr->origin_addr && r.state.missed_beacons == 0) rearm_loss_timer(m);
      if (out.forward) enqueue_mgmt(m, 0, FrameKind::tr, *codec::encode_tr(*out.forward), ++tr_ids_);
    }
  }

  void deliver_data(NodeId sender, Channel ch, Pending& p) {
    FrameRecord* rec = record_for(p.frame.inner);
    const auto target = p.receiver;
    bool ok = target && rt(*target).up && graph_.adjacent(sender, *target);
    if (ok) {
      ok = false;
      for (const auto& nic : rt(*target).state.nics) {
        if (nic.channel == ch && (nic.mode == NicMode::associated || nic.mode == NicMode::ap_active ||
                                  cfg_.mode == RadioMode::single)) {
          ok = true;
        }
      }
    }
    if (!ok) {
      ++rt(sender).state.counters.dropped;
      copy_finished(rec);
      return;
    }
    const NodeId m = *target;
    const int rx_nic = [&] {
      const auto& nics = rt(m).state.nics;
      for (std::size_t i = 0; i < nics.size(); ++i) {
        if (nics[i].channel == ch) return static_cast<int>(i);
      }
      return 0;
    }();
    trace(TraceKind::deliver, m, rx_nic, ch, FrameKind::data, p.frame_id);
    if (rec && opts_.record_paths) rec->path.push_back(m);
    Sink sink(*this, m);
    if (rec) ++rec->copies_in_flight;  // this copy now lives at m until dispatched
    on_receive(rt(m).state, p.frame, sink, now_);
    copy_finished(rec);  // the hop that just ended
    copy_finished(rec);  // the hold taken for dispatch
  }

  // ---- medium --------------------------------------------------------------

  struct Ongoing {
    NodeId node;
    int nic;
    TxEndpoints endpoints;
  };

  bool nic_can_send(const NodeRuntime& r, std::size_t i, const Pending& p) const {
    const auto& nic = r.state.nics[i];
    if (!nic.channel) return false;
    if (cfg_.mode == RadioMode::single) return true;
    if (p.kind == FrameKind::beacon) return nic.mode == NicMode::ap_active;
    return nic.mode == NicMode::associated || nic.mode == NicMode::ap_active;
  }

  void arbitrate() {
    for (;;) {
      struct Choice {
        NodeId node = -1;
        int nic = -1;
        bool mgmt = false;
        Micros enqueued = 0;
      } best;
      for (NodeId n = 0; n < node_count(); ++n) {
        auto& r = rt(n);
        if (!r.up) continue;
        for (std::size_t i = 0; i < r.nics.size(); ++i) {
          auto& q = r.nics[i];
          if (q.busy) continue;
          const bool mgmt = !q.mgmt.empty();
          if (!mgmt && q.data.empty()) continue;
          const Pending& head = mgmt ? q.mgmt.front() : q.data.front();
          if (!nic_can_send(r, i, head)) continue;
          TxEndpoints ep{n, std::nullopt, *r.state.nics[i].channel};
          if (head.kind == FrameKind::data) ep.receiver = head.receiver;
          bool blocked = false;
          for (const auto& o : ongoing_) {
            if (graph_.conflicts(ep, o.endpoints)) {
              blocked = true;
              break;
            }
          }
          if (blocked) continue;
          const bool better = best.node < 0 || (mgmt && !best.mgmt) ||
                              (mgmt == best.mgmt && head.enqueued < best.enqueued);
          if (better) best = Choice{n, static_cast<int>(i), mgmt, head.enqueued};
        }
      }
      if (best.node < 0) return;
      start_tx(best.node, best.nic, best.mgmt);
    }
  }

  void start_tx(NodeId n, int nic, bool mgmt) {
    auto& r = rt(n);
    auto& q = r.nics[static_cast<std::size_t>(nic)];
    auto& src = mgmt ? q.mgmt : q.data;
    q.in_flight = std::move(src.front());
    src.pop_front();
    q.busy = true;
    q.tx_id = ++tx_ids_;
    q.tx_start = now_;
    q.tx_channel = *r.state.nics[static_cast<std::size_t>(nic)].channel;
    const Pending& p = q.in_flight;
    const TxEndpoints ep{n, p.kind == FrameKind::data ? p.receiver : std::nullopt, q.tx_channel};
    ongoing_.push_back(Ongoing{n, nic, ep});
    const Micros end = now_ + airtime_ticks(p.air_octets, cfg_.constants.airtime);
    if (p.kind == FrameKind::tr) ++tr_sent_;
    if (p.kind == FrameKind::beacon) ++beacons_sent_;
    if (p.kind == FrameKind::data) {
      if (auto* rec = record_for(p.frame.inner); rec && rec->first_tx < 0) rec->first_tx = now_;
    }
    if (opts_.record_airtime) airtime_log_.push_back(AirtimeRecord{now_, end, ep, nic, p.kind});
    trace(TraceKind::tx_start, n, nic, q.tx_channel, p.kind, p.frame_id);
    push(end, TxEndEv{nic, q.tx_id}, n);
  }

  void note_topology_revision() {
    std::uint64_t sum = 0;
    for (const auto& r : nodes_) sum += r.state.revision + r.epoch;
    if (sum != revision_sum_) {
      revision_sum_ = sum;
      last_change_ = now_;
    }
  }

  ScenarioConfig cfg_;
  SimOptions opts_;
  std::mt19937_64 rng_;
  ConflictGraph graph_;
  NodeId gw_ = 0;
  Channel network_channel_ = 0;
  std::vector<NodeRuntime> nodes_;
  std::unordered_map<MacAddress, NodeId> mac_to_node_;
  EventQueue<Payload> queue_;
  std::vector<Ongoing> ongoing_;
  std::vector<FlowState> flow_state_;
  std::vector<FrameRecord> frames_;
  std::vector<TraceRecord> trace_;
  std::vector<AirtimeRecord> airtime_log_;
  Micros now_ = 0;
  Micros last_change_ = 0;
  std::uint64_t revision_sum_ = 0;
  std::uint64_t tx_ids_ = 0;
  std::uint64_t beacon_ids_ = 0;
  std::uint64_t tr_ids_ = 0;
  std::uint64_t tr_sent_ = 0;
  std::uint64_t beacons_sent_ = 0;
  Micros window_start_ = 0;
  Micros window_end_ = 0;
};

}  // namespace wifixdr
