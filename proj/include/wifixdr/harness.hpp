#pragma once

// Experiment orchestration: converge, prime bridges, inject traffic, and
// reduce the per-frame records into throughput / delay / fairness metrics.

#include <wifixdr/scenario.hpp>
#include <wifixdr/simulator.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace wifixdr {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FlowMetrics {
  int flow_id = 0;
  std::string src_node;
  double offered_mbps = 0.0;
  double throughput_mbps = 0.0;
  double delay_ms = 0.0;
  double drops = 0.0;
  double generated = 0.0;
  double delivered = 0.0;
  double queued = 0.0;
};

struct NodeSummary {
  std::string name;
  bool is_gw = false;
  int depth = -1;
  std::string parent;
  std::optional<Channel> up_channel;
  std::optional<Channel> down_channel;
};

struct MetricsReport {
  RadioMode mode = RadioMode::dual;
  std::vector<FlowMetrics> flows;
  double jain_index = 1.0;
  std::vector<NodeSummary> nodes;
  int runs = 1;

  double mean_throughput() const {
    if (flows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& f : flows) s += f.throughput_mbps;
    return s / static_cast<double>(flows.size());
  }
  double mean_delay() const {
    if (flows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& f : flows) s += f.delay_ms;
    return s / static_cast<double>(flows.size());
  }
  double total_drops() const {
    double s = 0.0;
    for (const auto& f : flows) s += f.drops;
    return s;
  }
};

// (sum x)^2 / (n * sum x^2); equal shares (including all-zero) give 1.
inline double jain_index(const std::vector<double>& x) {
  if (x.empty()) return 1.0;
  double s = 0.0;
  double s2 = 0.0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  if (s2 <= 0.0) return 1.0;
  return s * s / (static_cast<double>(x.size()) * s2);
}

inline std::vector<NodeSummary> summarize_nodes(const Simulator& sim) {
  std::vector<NodeSummary> out;
  const auto& cfg = sim.config();
  for (NodeId i = 0; i < sim.node_count(); ++i) {
    const auto& st = sim.node(i);
    NodeSummary s;
    s.name = cfg.nodes[static_cast<std::size_t>(i)].name;
    s.is_gw = st.is_gw;
    s.depth = st.depth;
    if (st.parent) {
      if (auto p = sim.node_by_mac(st.parent->mac)) s.parent = cfg.nodes[static_cast<std::size_t>(*p)].name;
    }
    if (st.is_gw) {
      s.down_channel = st.nics.front().channel;
    } else if (cfg.mode == RadioMode::single) {
      s.up_channel = st.nics.front().channel;
      s.down_channel = st.nics.front().channel;
    } else {
      if (int u = st.up_nic(); u >= 0) s.up_channel = st.nics[static_cast<std::size_t>(u)].channel;
      if (int d = st.down_nic(); d >= 0) s.down_channel = st.nics[static_cast<std::size_t>(d)].channel;
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Reduces raw frame records over the traffic window [start, end).
inline MetricsReport compute_metrics(const ScenarioConfig& cfg, const std::vector<FrameRecord>& frames,
                                     Micros start, Micros end) {
  MetricsReport rep;
  rep.mode = cfg.mode;
  const double seconds = static_cast<double>(end - start) / static_cast<double>(kMicrosPerSecond);
  rep.flows.resize(cfg.flows.size());
  std::vector<double> delay_sum(cfg.flows.size(), 0.0);
  for (std::size_t k = 0; k < cfg.flows.size(); ++k) {
    auto& m = rep.flows[k];
    m.flow_id = static_cast<int>(k);
    m.src_node = cfg.nodes[static_cast<std::size_t>(cfg.flows[k].src)].name;
    m.offered_mbps = cfg.flows[k].rate_mbps;
  }
  for (const auto& r : frames) {
    if (r.flow < 0 || static_cast<std::size_t>(r.flow) >= rep.flows.size()) continue;
    auto& m = rep.flows[static_cast<std::size_t>(r.flow)];
    m.generated += 1;
    if (r.is_delivered() && r.delivered < end) {
      m.delivered += 1;
      delay_sum[static_cast<std::size_t>(r.flow)] += static_cast<double>(r.delivered - r.enqueued) / 1000.0;
    } else if (r.dropped) {
      m.drops += 1;
    } else {
      m.queued += 1;
    }
  }
  std::vector<double> tput;
  for (std::size_t k = 0; k < rep.flows.size(); ++k) {
    auto& m = rep.flows[k];
    const double octets = m.delivered * static_cast<double>(cfg.flows[k].packet_size);
    m.throughput_mbps = seconds > 0.0 ? octets * 8.0 / seconds / 1e6 : 0.0;
    m.delay_ms = m.delivered > 0 ? delay_sum[k] / m.delivered : 0.0;
    tput.push_back(m.throughput_mbps);
  }
  rep.jain_index = jain_index(tput);
  return rep;
}

inline std::string tree_dump(const Simulator& sim) {
  std::ostringstream os;
  const auto nodes = summarize_nodes(sim);
  std::size_t w = 6;  // fits "parent"
  for (const auto& n : nodes) w = std::max(w, n.name.size());
  auto ch = [](const std::optional<Channel>& c) { return c ? std::to_string(*c) : std::string("-"); };
  os << std::left << std::setw(static_cast<int>(w)) << "node" << "  depth  " << std::setw(static_cast<int>(w))
     << "parent" << "  up   down\n";
  for (const auto& n : nodes) {
    os << std::left << std::setw(static_cast<int>(w)) << n.name << "  " << std::setw(5)
       << (n.depth < 0 ? std::string("-") : std::to_string(n.depth)) << "  " << std::setw(static_cast<int>(w))
       << (n.is_gw ? std::string("(gw)") : n.parent.empty() ? std::string("-") : n.parent) << "  " << std::setw(4)
       << ch(n.up_channel) << " " << ch(n.down_channel) << '\n';
  }
  return os.str();
}

inline std::string tree_csv(const std::vector<NodeSummary>& nodes) {
  std::ostringstream os;
  os << "node,depth,parent,up_channel,down_channel\n";
  for (const auto& n : nodes) {
    os << n.name << ',' << n.depth << ',' << n.parent << ',' << (n.up_channel ? std::to_string(*n.up_channel) : "")
       << ',' << (n.down_channel ? std::to_string(*n.down_channel) : "") << '\n';
  }
  return os.str();
}

inline std::string weight_tables_dump(const Simulator& sim) {
  std::ostringstream os;
  const auto& cfg = sim.config();
  for (NodeId i = 0; i < sim.node_count(); ++i) {
    const auto& st = sim.node(i);
    os << cfg.nodes[static_cast<std::size_t>(i)].name << ':';
    if (st.is_gw) {
      os << " gateway, channel " << (st.nics.front().channel ? std::to_string(*st.nics.front().channel) : "-")
         << '\n';
      continue;
    }
    if (!st.last_weights) {
      os << " no weight table\n";
      continue;
    }
    const auto& t = *st.last_weights;
    os << " d_hops=" << t.d_hops << '\n';
    for (const auto& r : t.reductions) {
      os << "  list[" << r.list_index << "] ch " << r.channel << " x " << r.d_k << '/' << t.d_hops << '\n';
    }
    for (const auto& [c, wgt] : t.weights) {
      os << "  ch " << std::setw(3) << c << "  weight " << std::setprecision(6) << wgt << '\n';
    }
    if (int d = st.down_nic(); d >= 0 && st.nics[static_cast<std::size_t>(d)].channel) {
      os << "  chosen " << *st.nics[static_cast<std::size_t>(d)].channel << '\n';
    }
  }
  return os.str();
}

struct RunOptions {
  SimOptions sim;
};

// One repetition. The simulator is returned so callers can inspect traces.
struct RunResult {
  MetricsReport report;
  Micros converged_at = 0;
  Micros window_start = 0;
  Micros window_end = 0;
  std::unique_ptr<Simulator> sim;
};

// Runs until every node is attached and the topology has been quiet for the
// configured number of intervals.
inline Micros converge(Simulator& sim) {
  const auto& c = sim.config().constants;
  const Micros step = c.topology.beacon_interval;
  Micros t = sim.now();
  while (!sim.converged()) {
    if (t > c.convergence_bound) {
      throw ExperimentError("topology did not converge within " + std::to_string(c.convergence_bound) +
                            " us\n" + tree_dump(sim));
    }
    t += step;
    sim.run_until(t);
  }
  return sim.now();
}

inline RunResult run_once(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts = {}) {
  RunResult res;
  res.sim = std::make_unique<Simulator>(cfg, seed, opts.sim);
  auto& sim = *res.sim;
  res.converged_at = converge(sim);
  sim.prime_bridges(sim.now());
  res.window_start = sim.now() + cfg.constants.settle;
  res.window_end = res.window_start + static_cast<Micros>(std::llround(cfg.duration_s * kMicrosPerSecond));
  sim.start_traffic(res.window_start, res.window_end);
  sim.run_until(res.window_end);
  res.report = compute_metrics(cfg, sim.frames(), res.window_start, res.window_end);
  res.report.nodes = summarize_nodes(sim);
  return res;
}

inline MetricsReport average_reports(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) return {};
  MetricsReport avg = runs.front();
  const double n = static_cast<double>(runs.size());
  avg.runs = static_cast<int>(runs.size());
  for (std::size_t k = 0; k < avg.flows.size(); ++k) {
    auto& f = avg.flows[k];
    f.throughput_mbps = f.delay_ms = f.drops = f.generated = f.delivered = f.queued = 0.0;
    for (const auto& r : runs) {
      const auto& g = r.flows[k];
      f.throughput_mbps += g.throughput_mbps / n;
      f.delay_ms += g.delay_ms / n;
      f.drops += g.drops / n;
      f.generated += g.generated / n;
      f.delivered += g.delivered / n;
      f.queued += g.queued / n;
    }
  }
  avg.jain_index = 0.0;
  for (const auto& r : runs) avg.jain_index += r.jain_index / n;
  return avg;
}

// Averages over cfg.repetitions runs seeded seed, seed+1, ...
inline MetricsReport run_experiment(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
  if (auto issues = validate_scenario(cfg); !issues.empty()) throw ConfigError(format_issues(issues));
  std::vector<MetricsReport> runs;
  for (int r = 0; r < std::max(1, cfg.repetitions); ++r) {
    runs.push_back(run_once(cfg, cfg.seed + static_cast<std::uint64_t>(r), opts).report);
  }
  return average_reports(runs);
}

struct SweepRow {
  RadioMode mode = RadioMode::dual;
  double offered_load_mbps = 0.0;
  double throughput_mbps = 0.0;  // mean over flows
  double delay_ms = 0.0;         // mean over flows
  double drops = 0.0;            // total over flows
  double jain_index = 1.0;
};

inline ScenarioConfig with_load(ScenarioConfig cfg, RadioMode mode, double load) {
  cfg.mode = mode;
  for (auto& f : cfg.flows) f.rate_mbps = load;
  return cfg;
}

// Rows are ordered mode-major, then by load, regardless of `parallel`.
inline std::vector<SweepRow> sweep(const ScenarioConfig& cfg, const std::vector<double>& loads,
                                   const std::vector<RadioMode>& modes = {RadioMode::dual, RadioMode::single},
                                   bool parallel = true) {
  std::vector<std::pair<RadioMode, double>> points;
  for (RadioMode m : modes) {
    for (double l : loads) points.emplace_back(m, l);
  }
  auto one = [&cfg](RadioMode m, double l) {
    const auto rep = run_experiment(with_load(cfg, m, l));
    return SweepRow{m, l, rep.mean_throughput(), rep.mean_delay(), rep.total_drops(), rep.jain_index};
  };
  std::vector<SweepRow> rows;
  if (parallel) {
    std::vector<std::future<SweepRow>> futs;
    for (auto [m, l] : points) futs.push_back(std::async(std::launch::async, one, m, l));
    for (auto& f : futs) rows.push_back(f.get());
  } else {
    for (auto [m, l] : points) rows.push_back(one(m, l));
  }
  return rows;
}

// Lowest swept load whose mean throughput falls more than `tolerance`
// (relative) below the offered load; nullopt if none does.
inline std::optional<double> saturation_onset(const std::vector<SweepRow>& rows, RadioMode mode,
                                              double tolerance = 0.05) {
  std::optional<double> onset;
  for (const auto& r : rows) {
    if (r.mode != mode || r.offered_load_mbps <= 0.0) continue;
    if (r.throughput_mbps < (1.0 - tolerance) * r.offered_load_mbps) {
      if (!onset || r.offered_load_mbps < *onset) onset = r.offered_load_mbps;
    }
  }
  return onset;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "mode,offered_load_mbps,flow_id,src_node,throughput_mbps,delay_ms,drops,jain_index";

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string_view mode_name(RadioMode m) { return m == RadioMode::dual ? "dual" : "single"; }

inline std::string emit_csv(const MetricsReport& rep) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& f : rep.flows) {
    out += std::string(mode_name(rep.mode)) + ',' + csv_number(f.offered_mbps) + ',' + std::to_string(f.flow_id) +
           ',' + f.src_node + ',' + csv_number(f.throughput_mbps) + ',' + csv_number(f.delay_ms) + ',' +
           csv_number(f.drops) + ',' + csv_number(rep.jain_index) + '\n';
  }
  return out;
}

inline std::string emit_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::string(mode_name(r.mode)) + ',' + csv_number(r.offered_load_mbps) + ",all,all," +
           csv_number(r.throughput_mbps) + ',' + csv_number(r.delay_ms) + ',' + csv_number(r.drops) + ',' +
           csv_number(r.jain_index) + '\n';
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

// ---------------------------------------------------------------------------
// Built-in scenario: gateway, two depth-1 MAPs, four depth-2 MAPs, one
// uplink flow per MAP.
// ---------------------------------------------------------------------------

inline constexpr const char* kFig2Scenario = R"(# 7-node stub mesh: gw -> {m1, m2}, m1 -> {m3, m4}, m2 -> {m5, m6}
[scenario]
name = fig2
mode = dual
duration = 60
repetitions = 1
seed = 1
gw_band = 2.4

[plan]
band_24 = 1,6,11
band_5 = 36,40,44,48

[nodes]
gw gw
m1
m2
m3
m4
m5
m6

[edges]
gw m1
gw m2
m1 m3
m1 m4
m2 m5
m2 m6

[flows]
m1 rate=1
m2 rate=1
m3 rate=1
m4 rate=1
m5 rate=1
m6 rate=1
)";

inline ScenarioConfig fig2_scenario() {
  auto cfg = parse_scenario(kFig2Scenario);
  if (!cfg) throw ConfigError("built-in scenario is invalid:\n" + format_issues(cfg.error()));
  return *cfg;
}

}  // namespace wifixdr
