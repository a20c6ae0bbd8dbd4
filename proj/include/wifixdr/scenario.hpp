#pragma once

// Scenario files: line-oriented sections of key/value lines.
//
//   [scenario]   name, mode (dual|single), duration (s), repetitions, seed,
//                gw_band (2.4|5), gw_channel, ssid
//   [plan]       band_24 = 1,6,11   band_5 = 36,40,44,48
//   [nodes]      <name> [gw] [mac=..] [host=..]
//   [edges]      <a> <b> [rssi=-60]
//   [flows]      <src> rate=<Mbit/s> [size=1400] [start=s] [stop=s]
//   [constants]  <key> = <value>
//   [events]     down|up <name> at=<s>
//
// '#' starts a comment. Flow sinks are always the GW-side host.

#include <wifixdr/channel_assign.hpp>
#include <wifixdr/common.hpp>
#include <wifixdr/medium.hpp>
#include <wifixdr/topology.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace wifixdr {

struct NodeSpec {
  std::string name;
  MacAddress mac;
  MacAddress host_mac;
  bool is_gw = false;
  int line = 0;
};

struct EdgeSpec {
  NodeId a = 0;
  NodeId b = 0;
  double rssi_dbm = -60.0;
};

struct FlowSpec {
  NodeId src = 0;
  double rate_mbps = 1.0;
  std::size_t packet_size = 1400;
  double start_s = 0.0;
  std::optional<double> stop_s;
};

struct NodeEventSpec {
  enum class Kind : std::uint8_t { down, up };
  Kind kind = Kind::down;
  NodeId node = 0;
  double at_s = 0.0;
};

struct SimConstants {
  TopologyConfig topology;
  AirtimeConstants airtime;
  std::size_t queue_limit = 100;
  int interference_hops = 1;
  Micros bridge_aging = kDefaultBridgeAging;
  int convergence_quiet_intervals = 5;
  Micros convergence_bound = 60 * kMicrosPerSecond;
  // Gap between the bridge-priming broadcast and the first data packet.
  Micros settle = 200'000;
  // How long an unattached node keeps listening after its first candidate
  // before picking a parent. 0 joins the best candidate heard so far.
  Micros scan_window = 0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  RadioMode mode = RadioMode::dual;
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  ChannelPlan plan;
  Band gw_band = Band::ghz24;
  std::optional<Channel> gw_channel;
  std::vector<FlowSpec> flows;
  SimConstants constants;
  double duration_s = 60.0;
  int repetitions = 1;
  std::uint64_t seed = 1;
  std::vector<NodeEventSpec> events;
  std::string ssid = "wifix-dr";

  NodeId gateway() const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].is_gw) return static_cast<NodeId>(i);
    }
    throw ConfigError("scenario has no gateway");
  }

  std::optional<NodeId> find(std::string_view name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].name == name) return static_cast<NodeId>(i);
    }
    return std::nullopt;
  }

  std::vector<std::pair<NodeId, NodeId>> edge_pairs() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edges.size());
    for (const auto& e : edges) out.emplace_back(e.a, e.b);
    return out;
  }

  double rssi(NodeId a, NodeId b) const {
    for (const auto& e : edges) {
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e.rssi_dbm;
    }
    return -60.0;
  }

  // Adds a node with default addresses derived from its index.
  NodeId add_node(std::string name, bool is_gw = false) {
    const auto idx = static_cast<std::uint32_t>(nodes.size() + 1);
    nodes.push_back(NodeSpec{std::move(name), MacAddress::from_index(0x02, idx), MacAddress::from_index(0x0A, idx),
                             is_gw, 0});
    return static_cast<NodeId>(nodes.size() - 1);
  }
};

struct ScenarioIssue {
  int line = 0;  // 0 when not tied to a line
  std::string message;

  std::string to_string() const {
    return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
  }
};

using ScenarioIssues = std::vector<ScenarioIssue>;

// Structural checks shared by the parser and programmatic configs.
inline ScenarioIssues validate_scenario(const ScenarioConfig& cfg) {
  ScenarioIssues issues;
  try {
    cfg.plan.validate();
  } catch (const ConfigError& e) {
    issues.push_back({0, e.what()});
  }
  try {
    cfg.constants.airtime.validate();
  } catch (const ConfigError& e) {
    issues.push_back({0, e.what()});
  }

  std::vector<int> gw_lines;
  std::map<std::string, int> seen_names;
  std::map<MacAddress, std::string> seen_macs;
  for (const auto& n : cfg.nodes) {
    if (n.is_gw) gw_lines.push_back(n.line);
    if (auto [it, fresh] = seen_names.emplace(n.name, n.line); !fresh) {
      issues.push_back({n.line, "duplicate node '" + n.name + "' (first defined on line " +
                                    std::to_string(it->second) + ")"});
    }
    for (const auto& mac : {n.mac, n.host_mac}) {
      if (auto [it, fresh] = seen_macs.emplace(mac, n.name); !fresh && it->second != n.name) {
        issues.push_back({n.line, "address " + mac.to_string() + " already used by '" + it->second + "'"});
      }
    }
  }
  if (cfg.nodes.empty()) issues.push_back({0, "no nodes defined"});
  if (gw_lines.empty() && !cfg.nodes.empty()) issues.push_back({0, "no gateway: exactly one node must be marked gw"});
  if (gw_lines.size() > 1) {
    std::string where;
    for (std::size_t i = 0; i < gw_lines.size(); ++i) {
      where += (i ? ", " : "") + std::string("line ") + std::to_string(gw_lines[i]);
    }
    issues.push_back({gw_lines[1], "more than one gateway (" + where + ")"});
  }

  if (cfg.gw_channel) {
    if (!cfg.plan.contains(*cfg.gw_channel)) {
      issues.push_back({0, "unknown channel " + std::to_string(*cfg.gw_channel) + ": not in the channel plan"});
    } else if (cfg.plan.band_of(*cfg.gw_channel) != cfg.gw_band) {
      issues.push_back({0, "gw_channel " + std::to_string(*cfg.gw_channel) + " is not in gw_band " +
                               std::string(to_string(cfg.gw_band))});
    }
  }

  const int n = static_cast<int>(cfg.nodes.size());
  bool edges_ok = true;
  for (const auto& e : cfg.edges) {
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) edges_ok = false;
  }
  if (n > 0 && edges_ok) {
    ConflictGraph g(n, cfg.edge_pairs());
    for (NodeId i = 1; i < n; ++i) {
      if (g.hop_distance(0, i) == ConflictGraph::kUnreachable) {
        issues.push_back({cfg.nodes[static_cast<std::size_t>(i)].line,
                          "graph is disconnected: '" + cfg.nodes[static_cast<std::size_t>(i)].name +
                              "' cannot reach '" + cfg.nodes[0].name + "'"});
      }
    }
  }

  for (const auto& f : cfg.flows) {
    if (f.src < 0 || f.src >= n) {
      issues.push_back({0, "flow source out of range"});
      continue;
    }
    if (cfg.nodes[static_cast<std::size_t>(f.src)].is_gw) {
      issues.push_back({0, "flow source '" + cfg.nodes[static_cast<std::size_t>(f.src)].name +
                               "' is the gateway; flows run from mesh nodes to the GW host"});
    }
    if (!(f.rate_mbps >= 0.0)) issues.push_back({0, "flow rate must be non-negative"});
    if (f.packet_size < 8 || f.packet_size > 1472) {
      issues.push_back({0, "flow packet size must be within 8..1472 octets"});
    }
    if (f.stop_s && *f.stop_s < f.start_s) issues.push_back({0, "flow stops before it starts"});
  }
  if (!(cfg.duration_s > 0.0)) issues.push_back({0, "duration must be positive"});
  if (cfg.repetitions < 1) issues.push_back({0, "repetitions must be at least 1"});
  if (cfg.constants.queue_limit < 1) issues.push_back({0, "queue_limit must be at least 1"});
  if (cfg.constants.interference_hops < 1) issues.push_back({0, "interference_hops must be at least 1"});
  if (cfg.constants.topology.beacon_interval <= 0) issues.push_back({0, "beacon interval must be positive"});
  return issues;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::vector<Channel>> parse_channel_list(std::string_view s) {
  std::vector<Channel> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    auto v = parse_number<int>(piece);
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

inline Expected<ScenarioConfig, ScenarioIssues> parse_scenario(std::string_view text) {
  using detail::parse_number;
  using detail::trim;

  ScenarioConfig cfg;
  ScenarioIssues issues;
  std::string section;
  int line_no = 0;

  struct PendingEdge { std::string a, b; double rssi; int line; };
  struct PendingFlow { std::string src; FlowSpec spec; int line; };
  struct PendingEvent { std::string node; NodeEventSpec spec; int line; };
  std::vector<PendingEdge> edges;
  std::vector<PendingFlow> flows;
  std::vector<PendingEvent> events;

  auto issue = [&](std::string msg) { issues.push_back({line_no, std::move(msg)}); };

  auto split_kv = [](std::string_view s) -> std::optional<std::pair<std::string_view, std::string_view>> {
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    return std::pair{trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        issue("malformed section header");
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"scenario", "plan", "nodes", "edges", "flows", "constants", "events"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        issue("unknown section [" + section + "]");
      }
      continue;
    }

    if (section == "scenario" || section == "plan" || section == "constants") {
      auto kv = split_kv(line);
      if (!kv) {
        issue("expected key = value");
        continue;
      }
      const auto [key, value] = *kv;
      auto num = [&](auto& out) {
        using T = std::remove_reference_t<decltype(out)>;
        if (auto v = parse_number<T>(value)) out = *v;
        else issue("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
      };
      auto micros = [&](Micros& out) { num(out); };

      if (section == "scenario") {
        if (key == "name") cfg.name = std::string(value);
        else if (key == "mode") {
          if (value == "dual") cfg.mode = RadioMode::dual;
          else if (value == "single") cfg.mode = RadioMode::single;
          else issue("mode must be 'dual' or 'single'");
        } else if (key == "duration") num(cfg.duration_s);
        else if (key == "repetitions") num(cfg.repetitions);
        else if (key == "seed") num(cfg.seed);
        else if (key == "gw_band") {
          if (value == "2.4") cfg.gw_band = Band::ghz24;
          else if (value == "5") cfg.gw_band = Band::ghz5;
          else issue("gw_band must be 2.4 or 5");
        } else if (key == "gw_channel") {
          int ch = 0;
          num(ch);
          cfg.gw_channel = ch;
        } else if (key == "ssid") cfg.ssid = std::string(value);
        else issue("unknown scenario key '" + std::string(key) + "'");
      } else if (section == "plan") {
        auto list = detail::parse_channel_list(value);
        if (!list) issue("bad channel list");
        else if (key == "band_24") cfg.plan.band_24 = *list;
        else if (key == "band_5") cfg.plan.band_5 = *list;
        else issue("unknown plan key '" + std::string(key) + "'");
      } else {
        auto& c = cfg.constants;
        if (key == "beacon_interval_us") micros(c.topology.beacon_interval);
        else if (key == "association_latency_us") micros(c.topology.association_latency);
        else if (key == "beacon_loss_threshold") num(c.topology.beacon_loss_threshold);
        else if (key == "candidate_expiry_us") micros(c.topology.candidate_expiry);
        else if (key == "tr_period_us") micros(c.topology.tr_period);
        else if (key == "queue_limit") num(c.queue_limit);
        else if (key == "interference_hops") num(c.interference_hops);
        else if (key == "bridge_aging_us") micros(c.bridge_aging);
        else if (key == "convergence_quiet_intervals") num(c.convergence_quiet_intervals);
        else if (key == "convergence_bound_us") micros(c.convergence_bound);
        else if (key == "settle_us") micros(c.settle);
        else if (key == "scan_window_us") micros(c.scan_window);
        else if (key == "slot_us") num(c.airtime.slot_us);
        else if (key == "sifs_us") num(c.airtime.sifs_us);
        else if (key == "difs_us") num(c.airtime.difs_us);
        else if (key == "mean_backoff_us") num(c.airtime.mean_backoff_us);
        else if (key == "plcp_us") num(c.airtime.plcp_us);
        else if (key == "data_rate_mbps") num(c.airtime.data_rate_mbps);
        else if (key == "control_rate_mbps") num(c.airtime.control_rate_mbps);
        else if (key == "ack_octets") num(c.airtime.ack_octets);
        else if (key == "mac_overhead_octets") num(c.airtime.mac_overhead_octets);
        else issue("unknown constant '" + std::string(key) + "'");
      }
      continue;
    }

    const auto tokens = detail::split_ws(line);
    if (section == "nodes") {
      NodeSpec spec;
      spec.name = std::string(tokens[0]);
      spec.line = line_no;
      const auto idx = static_cast<std::uint32_t>(cfg.nodes.size() + 1);
      spec.mac = MacAddress::from_index(0x02, idx);
      spec.host_mac = MacAddress::from_index(0x0A, idx);
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i] == "gw") {
          spec.is_gw = true;
        } else if (auto kv = split_kv(tokens[i]); kv && (kv->first == "mac" || kv->first == "host")) {
          auto mac = MacAddress::parse(kv->second);
          if (!mac) issue("bad MAC address '" + std::string(kv->second) + "'");
          else (kv->first == "mac" ? spec.mac : spec.host_mac) = *mac;
        } else {
          issue("unknown node attribute '" + std::string(tokens[i]) + "'");
        }
      }
      cfg.nodes.push_back(std::move(spec));
    } else if (section == "edges") {
      if (tokens.size() < 2) {
        issue("edge needs two node names");
        continue;
      }
      PendingEdge e{std::string(tokens[0]), std::string(tokens[1]), -60.0, line_no};
      for (std::size_t i = 2; i < tokens.size(); ++i) {
        auto kv = split_kv(tokens[i]);
        if (kv && kv->first == "rssi") {
          if (auto v = parse_number<double>(kv->second)) e.rssi = *v;
          else issue("bad rssi");
        } else {
          issue("unknown edge attribute '" + std::string(tokens[i]) + "'");
        }
      }
      edges.push_back(std::move(e));
    } else if (section == "flows") {
      PendingFlow f{std::string(tokens[0]), {}, line_no};
      bool have_rate = false;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        auto kv = split_kv(tokens[i]);
        if (!kv) {
          issue("expected key=value in flow, got '" + std::string(tokens[i]) + "'");
          continue;
        }
        const auto [key, value] = *kv;
        if (key == "rate") {
          if (auto v = parse_number<double>(value)) {
            f.spec.rate_mbps = *v;
            have_rate = true;
          } else {
            issue("bad flow rate");
          }
        } else if (key == "size") {
          if (auto v = parse_number<std::size_t>(value)) f.spec.packet_size = *v;
          else issue("bad flow size");
        } else if (key == "start") {
          if (auto v = parse_number<double>(value)) f.spec.start_s = *v;
          else issue("bad flow start");
        } else if (key == "stop") {
          if (auto v = parse_number<double>(value)) f.spec.stop_s = *v;
          else issue("bad flow stop");
        } else {
          issue("unknown flow attribute '" + std::string(key) + "'");
        }
      }
      if (!have_rate) issue("flow needs rate=<Mbit/s>");
      flows.push_back(std::move(f));
    } else if (section == "events") {
      if (tokens.size() < 3 || (tokens[0] != "down" && tokens[0] != "up")) {
        issue("expected: down|up <node> at=<seconds>");
        continue;
      }
      PendingEvent ev{std::string(tokens[1]), {}, line_no};
      ev.spec.kind = tokens[0] == "down" ? NodeEventSpec::Kind::down : NodeEventSpec::Kind::up;
      auto kv = split_kv(tokens[2]);
      std::optional<double> at;
      if (kv && kv->first == "at") at = parse_number<double>(kv->second);
      if (!at) issue("event needs at=<seconds>");
      else ev.spec.at_s = *at;
      events.push_back(std::move(ev));
    } else {
      issue("content outside of a known section");
    }
  }

  // Resolve names now that every node is known.
  auto resolve = [&](const std::string& name, int line) -> std::optional<NodeId> {
    auto id = cfg.find(name);
    if (!id) issues.push_back({line, "unknown node '" + name + "'"});
    return id;
  };
  for (const auto& e : edges) {
    auto a = resolve(e.a, e.line);
    auto b = resolve(e.b, e.line);
    if (a && b) {
      if (*a == *b) issues.push_back({e.line, "self-loop edge on '" + e.a + "'"});
      else cfg.edges.push_back({*a, *b, e.rssi});
    }
  }
  for (auto& f : flows) {
    if (auto id = resolve(f.src, f.line)) {
      f.spec.src = *id;
      cfg.flows.push_back(f.spec);
    }
  }
  for (auto& ev : events) {
    if (auto id = resolve(ev.node, ev.line)) {
      ev.spec.node = *id;
      cfg.events.push_back(ev.spec);
    }
  }

  // Put the gateway first: node 0 is the GW everywhere downstream.
  if (issues.empty()) {
    auto gw_it = std::find_if(cfg.nodes.begin(), cfg.nodes.end(), [](const NodeSpec& n) { return n.is_gw; });
    if (gw_it != cfg.nodes.end() && gw_it != cfg.nodes.begin()) {
      const auto gw_index = static_cast<NodeId>(gw_it - cfg.nodes.begin());
      std::vector<NodeId> remap(cfg.nodes.size());
      std::vector<NodeSpec> reordered{*gw_it};
      remap[static_cast<std::size_t>(gw_index)] = 0;
      for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
        if (static_cast<NodeId>(i) == gw_index) continue;
        remap[i] = static_cast<NodeId>(reordered.size());
        reordered.push_back(cfg.nodes[i]);
      }
      cfg.nodes = std::move(reordered);
      for (auto& e : cfg.edges) {
        e.a = remap[static_cast<std::size_t>(e.a)];
        e.b = remap[static_cast<std::size_t>(e.b)];
      }
      for (auto& f : cfg.flows) f.src = remap[static_cast<std::size_t>(f.src)];
      for (auto& ev : cfg.events) ev.node = remap[static_cast<std::size_t>(ev.node)];
    }
  }

  auto structural = validate_scenario(cfg);
  issues.insert(issues.end(), structural.begin(), structural.end());
  if (!issues.empty()) return Unexpected<ScenarioIssues>{std::move(issues)};
  return cfg;
}

inline std::string format_issues(const ScenarioIssues& issues) {
  std::ostringstream os;
  for (const auto& i : issues) os << i.to_string() << '\n';
  return os.str();
}

}  // namespace wifixdr
