/* Command-line front end for the routing library.
 *
 * Subcommands
 *   solve        plan a scenario: routing-rate program, feasible-region
 *                report, basic activity graph, optional demand-to-flow map
 *   simulate     one discrete-event run, full trace exports
 *   experiment   (policy x replication) sweep with a comparison table
 *   convergence  price-tracking diagnosis across a decreasing beta sweep
 *   deviations   diffusion-scaled deviation series at several system scales
 *
 * All station / EV-type indices on the command line and in text outputs are
 * 1-based; TSV files carry one header line and are byte-identical across
 * reruns of the same resolved configuration. With --out DIR the artifacts
 * are written into DIR (created if needed) next to a manifest.txt recording
 * the exact resolved configuration; without it the main artifact is printed
 * to stdout.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evroute/diffusion.hpp"
#include "evroute/engine.hpp"
#include "evroute/experiment.hpp"
#include "evroute/planner.hpp"
#include "evroute/scenario.hpp"

namespace {

using namespace evroute;

/* ---------------------------------------------------------------- helpers */

std::vector<std::string> split_ws(const std::string& text, char extra = '\0') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',' || (extra && ch == extra)) {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
      if (extra && ch == extra) out.push_back(std::string(1, extra));
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& tok : split_ws(text)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "'" + tok + "' is not a number");
    }
  }
  return out;
}

/* "1 2 3 ; 2 3" -> two clusters {0,1,2} and {1,2} (input is 1-based). */
ClusterSet parse_clusters(const std::string& members_text, const std::string& weights_text,
                          int charger_types) {
  ClusterSet set;
  set.members.emplace_back();
  for (const std::string& tok : split_ws(members_text, ';')) {
    if (tok == ";") {
      set.members.emplace_back();
      continue;
    }
    int station = 0;
    try {
      station = std::stoi(tok);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--clusters", "'" + tok + "' is not a station index");
    }
    if (station < 1 || station > charger_types)
      throw CLI::ValidationError("--clusters", "station " + tok + " out of range 1.." +
                                                   std::to_string(charger_types));
    set.members.back().push_back(station - 1);
  }
  if (set.members.back().empty()) set.members.pop_back();
  set.weights = parse_doubles(weights_text, "--weights");
  if (set.weights.size() != set.members.size())
    throw CLI::ValidationError("--weights", std::to_string(set.weights.size()) + " weights for " +
                                                std::to_string(set.members.size()) + " clusters");
  return set;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  std::cout << "wrote " << path.string() << '\n';
}

/* Either prints the artifact or writes it into the output directory. */
struct Sink {
  std::optional<std::filesystem::path> dir;

  explicit Sink(const std::string& out_dir) {
    if (!out_dir.empty()) {
      dir = std::filesystem::path(out_dir);
      std::filesystem::create_directories(*dir);
    }
  }
  void emit(const std::string& name, const std::string& content, bool to_stdout = true) const {
    if (dir)
      write_file(*dir / name, content);
    else if (to_stdout)
      std::cout << content;
  }
};

std::string manifest_text(const std::string& command, const std::vector<std::string>& lines,
                          const Scenario& sc) {
  std::ostringstream os;
  os << "command: " << command << '\n';
  for (const std::string& line : lines) os << line << '\n';
  os << "--- scenario ---\n" << to_scenario_text(sc);
  return os.str();
}

/* Flags shared by every subcommand that loads a scenario. */
struct ScenarioFlags {
  std::string scenario;
  std::string clusters;
  std::string weights = "10";
  std::string out_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("-s,--scenario", scenario,
                    "preset name (toy-s6 | example-a | example-b) or scenario file path")
        ->required();
    cmd->add_option("--clusters", clusters,
                    "replace the scenario's station clusters: 1-based station lists, ';' between "
                    "clusters, e.g. \"1 2 3\" or \"1 2; 2 3\"");
    cmd->add_option("--weights", weights, "one load-balancing weight per cluster (default 10)");
    cmd->add_option("-o,--out", out_dir, "output directory (default: print to stdout)");
  }

  Scenario load() const {
    Scenario sc = load_scenario(scenario);
    if (!clusters.empty())
      sc.config.clusters = parse_clusters(clusters, weights, sc.spec.net.charger_types);
    return sc;
  }
};

std::string flow_map_tsv(const FlowDeviationMap& map) {
  std::ostringstream os;
  os.precision(17);
  os << "ev_type\tstation";
  for (int i = 0; i < map.ev_types; ++i) os << "\tcoeff_v" << (i + 1);
  os << '\n';
  for (size_t e = 0; e < map.edges.size(); ++e) {
    os << (map.edges[e].first + 1) << '\t' << (map.edges[e].second + 1);
    for (int i = 0; i < map.ev_types; ++i) os << '\t' << map.coeff[e][static_cast<size_t>(i)];
    os << '\n';
  }
  return os.str();
}

/* ------------------------------------------------------------ subcommands */

int run_solve(const ScenarioFlags& flags, bool want_flow_map) {
  const Scenario sc = flags.load();
  const bool balanced = sc.config.clusters.count() > 0;
  const LpSolution sol =
      balanced ? solve_lb_lp(sc.spec, sc.config.clusters) : solve_stability_lp(sc.spec);
  const FeasibleRegionReport region = feasible_region_membership(sc.spec);

  Sink sink(flags.out_dir);
  std::ostringstream plan;
  plan << (balanced ? "program: balanced-load routing rates\n" : "program: min-cost routing rates\n")
       << to_text(sol);
  sink.emit("plan.txt", plan.str());
  sink.emit("region.txt", to_text(region));

  std::string basic_text = "basic activities undefined (program not optimal)\n";
  std::optional<BasicActivityGraph> graph;
  if (sol.status == LpStatus::optimal) {
    graph = extract_basic_activities(sol, sc.spec);
    basic_text = to_text(*graph);
  }
  sink.emit("basic.txt", basic_text);

  if (want_flow_map) {
    if (!graph) throw std::runtime_error("flow map undefined: program not optimal");
    const FlowDeviationMap map = build_flow_deviation_map(*graph, sc.spec.net.service_rates);
    sink.emit("flow_map.tsv", flow_map_tsv(map));
  }
  sink.emit("manifest.txt",
            manifest_text("solve", {std::string("flow_map: ") + (want_flow_map ? "yes" : "no")}, sc),
            /*to_stdout=*/false);
  return 0;
}

int run_simulate(const ScenarioFlags& flags, const std::string& policy, double beta,
                 std::uint64_t seed, bool audit) {
  Scenario sc = flags.load();
  if (!policy.empty()) {
    const std::optional<PolicyKind> kind = policy_from_name(policy);
    if (!kind) throw CLI::ValidationError("--policy", "unknown policy '" + policy + "'");
    sc.config.policy = *kind;
  }
  if (beta > 0) sc.config.beta = beta;
  if (seed != 0) sc.seeds.base = seed;
  sc.config.audit = audit;

  const BasicActivityGraph* basic_ptr = nullptr;
  BasicActivityGraph basic;
  if (sc.config.policy == PolicyKind::fcsq) {
    const LpSolution sol = sc.config.clusters.count() > 0
                               ? solve_lb_lp(sc.spec, sc.config.clusters)
                               : solve_stability_lp(sc.spec);
    basic = extract_basic_activities(sol, sc.spec);
    basic_ptr = &basic;
  }
  const SimTrace trace = run_simulation(sc.spec, sc.config, sc.seeds, basic_ptr);

  Sink sink(flags.out_dir);
  sink.emit("summary.txt", to_text(summarize(trace)));
  sink.emit("requests.tsv", requests_tsv(trace), /*to_stdout=*/false);
  sink.emit("occupancy.tsv", occupancy_tsv(trace), /*to_stdout=*/false);
  sink.emit("grid.tsv", grid_tsv(trace), /*to_stdout=*/false);
  if (audit) sink.emit("audits.tsv", audits_tsv(trace), /*to_stdout=*/false);
  std::ostringstream lines;
  lines << "policy: " << policy_name(sc.config.policy) << "\nseed: " << sc.seeds.base;
  sink.emit("manifest.txt", manifest_text("simulate", {lines.str()}, sc), /*to_stdout=*/false);
  return 0;
}

int run_experiment_cmd(const ScenarioFlags& flags, const std::string& policies, double beta,
                       int replications, std::uint64_t seed_base) {
  ExperimentPlan plan;
  plan.scenario = flags.load();
  if (beta > 0) plan.scenario.config.beta = beta;
  for (const std::string& tok : split_ws(policies)) {
    const std::optional<PolicyKind> kind = policy_from_name(tok);
    if (!kind) throw CLI::ValidationError("--policies", "unknown policy '" + tok + "'");
    plan.policies.push_back(*kind);
  }
  plan.replications = replications;
  plan.seed_base = seed_base;
  plan.out_dir = flags.out_dir;

  const ExperimentResult result = run_experiment(plan);
  if (flags.out_dir.empty()) std::cout << result.comparison_tsv;
  std::cout << median_block(result);
  return 0;
}

int run_convergence(const ScenarioFlags& flags, const std::string& betas_text,
                    double horizon_multiple, std::uint64_t seed) {
  const Scenario sc = flags.load();
  std::vector<double> betas = parse_doubles(betas_text, "--betas");
  if (betas.empty()) throw CLI::ValidationError("--betas", "need at least one beta");

  const LpSolution sol = solve_stability_lp(sc.spec);
  std::vector<SimTrace> traces;
  traces.reserve(betas.size());
  for (double beta : betas) {
    SimConfig cfg = sc.config;
    cfg.policy = PolicyKind::gpd;
    cfg.beta = beta;
    cfg.horizon_arrivals = 0;
    cfg.horizon_time = horizon_multiple / beta;
    cfg.grid_dt = cfg.horizon_time / 400.0;
    traces.push_back(run_simulation(sc.spec, cfg, SimSeeds{seed == 0 ? sc.seeds.base : seed}));
  }
  std::vector<ConvergenceInput> inputs;
  for (size_t k = 0; k < betas.size(); ++k) inputs.push_back({betas[k], &traces[k]});
  const ConvergenceReport report = diagnose_convergence(inputs, sol);

  Sink sink(flags.out_dir);
  sink.emit("convergence.txt", to_text(report));
  std::ostringstream lines;
  lines << "betas:";
  for (double b : betas) lines << ' ' << b;
  lines << "\nhorizon_multiple: " << horizon_multiple;
  sink.emit("manifest.txt", manifest_text("convergence", {lines.str()}, sc), /*to_stdout=*/false);
  return 0;
}

int run_deviations(const ScenarioFlags& flags, const std::string& rs_text, double exponent,
                   const std::string& slack_text, int replications, double horizon, double grid_dt,
                   std::uint64_t seed_base) {
  const Scenario sc = flags.load();
  const std::vector<double> rs = parse_doubles(rs_text, "--r");
  if (rs.empty()) throw CLI::ValidationError("--r", "need at least one scale");
  const std::vector<double> slack = parse_doubles(slack_text, "--slack");

  const LpSolution sol = solve_stability_lp(sc.spec);
  const BasicActivityGraph graph = extract_basic_activities(sol, sc.spec);

  Sink sink(flags.out_dir);
  std::ostringstream checks;
  checks.precision(17);
  checks << "r\treplication\tseed\tsup_dual_gap\tnonbasic_fraction\n";
  for (size_t ri = 0; ri < rs.size(); ++ri) {
    ScalingSchedule sched{rs[ri], exponent, slack};
    const ValidatedSpec big = make_scaled_system(sc.spec, sched);
    SimConfig cfg = sc.config;
    cfg.policy = PolicyKind::gpd;
    cfg.beta = sched.beta();
    cfg.horizon_arrivals = 0;
    cfg.horizon_time = horizon;
    cfg.grid_dt = grid_dt;
    cfg.rate_switch.reset();
    cfg.initial_virtual_queues.clear();
    for (double q : sol.capacity_duals) cfg.initial_virtual_queues.push_back(q / sched.beta());

    for (int k = 0; k < replications; ++k) {
      const std::uint64_t seed = seed_base + 1000 * static_cast<std::uint64_t>(ri) +
                                 static_cast<std::uint64_t>(k);
      const SimTrace trace = run_simulation(big, cfg, SimSeeds{seed});
      const DeviationSeries dev = compute_deviations(trace, sol, graph, sched);
      const ScaledRunCheck check = evaluate_scaled_run(trace, sol, graph, sched);
      checks << rs[ri] << '\t' << k << '\t' << seed << '\t' << check.sup_dual_gap << '\t'
             << check.nonbasic_fraction << '\n';
      std::ostringstream name;
      name << "deviations_r" << rs[ri] << "_k" << k << ".tsv";
      sink.emit(name.str(), deviations_tsv(dev), /*to_stdout=*/false);
    }
  }
  sink.emit("checks.tsv", checks.str());
  std::ostringstream lines;
  lines << "r:";
  for (double r : rs) lines << ' ' << r;
  lines << "\nexponent: " << exponent << "\nreplications: " << replications
        << "\nhorizon: " << horizon << "\ngrid_dt: " << grid_dt << "\nseed_base: " << seed_base;
  sink.emit("manifest.txt", manifest_text("deviations", {lines.str()}, sc), /*to_stdout=*/false);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV-to-charging-station routing: planning, simulation, and diagnostics"};
  app.require_subcommand(1);

  ScenarioFlags solve_flags;
  bool want_flow_map = false;
  CLI::App* solve_cmd = app.add_subcommand(
      "solve", "routing-rate program, feasible-region report, basic activities");
  solve_flags.attach(solve_cmd);
  solve_cmd->add_flag("--flow-map", want_flow_map,
                      "also emit the demand-to-flow deviation map coefficients");

  ScenarioFlags sim_flags;
  std::string sim_policy;
  double sim_beta = 0.0;
  std::uint64_t sim_seed = 0;
  bool sim_audit = false;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "one seeded run with full trace exports");
  sim_flags.attach(sim_cmd);
  sim_cmd->add_option("-p,--policy", sim_policy, "gpd | lb | fcsq | greedy (default: scenario's)");
  sim_cmd->add_option("--beta", sim_beta, "price parameter override (> 0)");
  sim_cmd->add_option("--seed", sim_seed, "seed override (nonzero)");
  sim_cmd->add_flag("--audit", sim_audit, "export per-decision score logs (audits.tsv)");

  ScenarioFlags exp_flags;
  std::string exp_policies;
  double exp_beta = 0.0;
  int exp_replications = 5;
  std::uint64_t exp_seed_base = 1;
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "(policy x replication) sweep and comparison table");
  exp_flags.attach(exp_cmd);
  exp_cmd->add_option("-p,--policies", exp_policies, "policy list, e.g. \"gpd,lb,fcsq\"")
      ->required();
  exp_cmd->add_option("--beta", exp_beta, "price parameter override (> 0)");
  exp_cmd->add_option("-r,--replications", exp_replications, "replications per policy (default 5)")
      ->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed-base", exp_seed_base, "replication k uses seed seed-base + k");

  ScenarioFlags conv_flags;
  std::string conv_betas = "0.1 0.01 0.001";
  double conv_multiple = 20.0;
  std::uint64_t conv_seed = 0;
  CLI::App* conv_cmd =
      app.add_subcommand("convergence", "price tracking across a decreasing beta sweep");
  conv_flags.attach(conv_cmd);
  conv_cmd->add_option("--betas", conv_betas, "beta values (default \"0.1 0.01 0.001\")");
  conv_cmd->add_option("--horizon-multiple", conv_multiple,
                       "each run lasts horizon-multiple / beta time units (default 20)");
  conv_cmd->add_option("--seed", conv_seed, "seed override (nonzero)");

  ScenarioFlags dev_flags;
  std::string dev_rs = "1 4 16";
  double dev_exponent = 0.75;
  std::string dev_slack = "";
  int dev_replications = 1;
  double dev_horizon = 20.0;
  double dev_grid = 1.0;
  std::uint64_t dev_seed_base = 90000;
  CLI::App* dev_cmd = app.add_subcommand(
      "deviations", "diffusion-scaled queue and flow deviations at several system scales");
  dev_flags.attach(dev_cmd);
  dev_cmd->add_option("--r", dev_rs, "system scales (default \"1 4 16\")");
  dev_cmd->add_option("--exponent", dev_exponent,
                      "beta = r^-exponent, exponent in (0.5, 1) (default 0.75)");
  dev_cmd->add_option("--slack", dev_slack, "per-station staffing slack n_j (default zeros)");
  dev_cmd->add_option("--replications", dev_replications, "runs per scale (default 1)")
      ->check(CLI::PositiveNumber);
  dev_cmd->add_option("--time", dev_horizon, "arrival horizon in time units (default 20)");
  dev_cmd->add_option("--grid-dt", dev_grid, "sampling resolution (default 1)");
  dev_cmd->add_option("--seed-base", dev_seed_base,
                      "scale index ri, replication k uses seed-base + 1000 ri + k");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return run_solve(solve_flags, want_flow_map);
    if (sim_cmd->parsed()) return run_simulate(sim_flags, sim_policy, sim_beta, sim_seed, sim_audit);
    if (exp_cmd->parsed())
      return run_experiment_cmd(exp_flags, exp_policies, exp_beta, exp_replications, exp_seed_base);
    if (conv_cmd->parsed()) return run_convergence(conv_flags, conv_betas, conv_multiple, conv_seed);
    if (dev_cmd->parsed())
      return run_deviations(dev_flags, dev_rs, dev_exponent, dev_slack, dev_replications,
                            dev_horizon, dev_grid, dev_seed_base);
  } catch (const CLI::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
