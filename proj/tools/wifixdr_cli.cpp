// Command-line front end for the mesh simulator.
//
//   wifixdr_cli run <scenario> [--mode dual|single] [--seed N] [--duration S] [--out file.csv] [--trace file]
//   wifixdr_cli sweep <scenario> --loads 1,2,3,4,5 [--out file.csv]
//   wifixdr_cli tree <scenario> [--csv]
//   wifixdr_cli channels <scenario>
//
// <scenario> is a scenario file path, or "fig2" for the built-in topology.

#include <wifixdr/harness.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace wifixdr;

ScenarioConfig load_scenario(const std::string& arg) {
  if (arg == "fig2") return fig2_scenario();
  std::ifstream in(arg, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario file '" + arg + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_scenario(ss.str());
  if (!cfg) throw ConfigError(arg + ":\n" + format_issues(cfg.error()));
  return *cfg;
}

void output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else write_file(path, content);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-radio stub mesh simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out;
  std::string trace_path;
  std::vector<double> loads{1, 2, 3, 4, 5};
  bool serial = false;
  bool csv = false;

  auto* run = app.add_subcommand("run", "Converge, inject traffic and report per-flow metrics");
  run->add_option("scenario", scenario, "Scenario file or 'fig2'")->required();
  run->add_option("--mode", mode, "Radio mode")->check(CLI::IsMember({"dual", "single"}));
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--duration", duration, "Traffic window in seconds")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "CSV output path (default stdout)");
  run->add_option("--trace", trace_path, "Write the event trace of the first repetition");

  auto* sw = app.add_subcommand("sweep", "Run both modes over a list of per-flow loads");
  sw->add_option("scenario", scenario, "Scenario file or 'fig2'")->required();
  sw->add_option("--loads", loads, "Per-flow offered loads in Mbit/s")->delimiter(',');
  sw->add_option("--mode", mode, "Restrict to one radio mode")->check(CLI::IsMember({"dual", "single"}));
  sw->add_option("--seed", seed, "RNG seed");
  sw->add_option("--duration", duration, "Traffic window in seconds")->check(CLI::PositiveNumber);
  sw->add_option("--out", out, "CSV output path (default stdout)");
  sw->add_flag("--serial", serial, "Run sweep points one at a time");

  auto* tree = app.add_subcommand("tree", "Print the converged topology");
  tree->add_option("scenario", scenario, "Scenario file or 'fig2'")->required();
  tree->add_option("--mode", mode, "Radio mode")->check(CLI::IsMember({"dual", "single"}));
  tree->add_option("--seed", seed, "RNG seed");
  tree->add_flag("--csv", csv, "CSV instead of an aligned table");

  auto* chans = app.add_subcommand("channels", "Print each node's channel weight table after convergence");
  chans->add_option("scenario", scenario, "Scenario file or 'fig2'")->required();
  chans->add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_scenario(scenario);
    if (!mode.empty()) cfg.mode = mode == "dual" ? RadioMode::dual : RadioMode::single;
    if (seed) cfg.seed = *seed;
    if (duration) cfg.duration_s = *duration;

    if (*run) {
      RunOptions opts;
      opts.sim.record_trace = !trace_path.empty();
      std::vector<MetricsReport> reports;
      for (int r = 0; r < std::max(1, cfg.repetitions); ++r) {
        auto res = run_once(cfg, cfg.seed + static_cast<std::uint64_t>(r), opts);
        if (r == 0 && !trace_path.empty()) write_file(trace_path, res.sim->trace_text());
        opts.sim.record_trace = false;
        reports.push_back(std::move(res.report));
      }
      output(out, emit_csv(average_reports(reports)));
    } else if (*sw) {
      std::vector<RadioMode> modes{RadioMode::dual, RadioMode::single};
      if (!mode.empty()) modes = {cfg.mode};
      output(out, emit_csv(sweep(cfg, loads, modes, !serial)));
    } else if (*tree || *chans) {
      Simulator sim(cfg, cfg.seed);
      converge(sim);
      if (*chans) std::cout << weight_tables_dump(sim);
      else if (csv) std::cout << tree_csv(summarize_nodes(sim));
      else std::cout << tree_dump(sim);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ExperimentError& e) {
    std::cerr << "experiment error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
