#include "evroute/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evroute/planner.hpp"

namespace evroute {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  if (n == 0) return 0.0;
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  if (plan.policies.empty()) throw std::invalid_argument("experiment needs at least one policy");
  if (plan.replications < 1) throw std::invalid_argument("experiment needs at least one replication");

  const bool wants_fcsq =
      std::find(plan.policies.begin(), plan.policies.end(), PolicyKind::fcsq) != plan.policies.end();
  BasicActivityGraph basic;
  if (wants_fcsq) {
    // prefer the load-balancing plan when the scenario defines clusters: on
    // zero-cost networks the plain program has many optimal supports and a
    // simplex vertex can starve stations the balanced plan would use
    const LpSolution sol = plan.scenario.config.clusters.count() > 0
                               ? solve_lb_lp(plan.scenario.spec, plan.scenario.config.clusters)
                               : solve_stability_lp(plan.scenario.spec);
    basic = extract_basic_activities(sol, plan.scenario.spec);
  }

  const bool writing = !plan.out_dir.empty();
  std::filesystem::path out(plan.out_dir);
  if (writing) std::filesystem::create_directories(out);

  ExperimentResult result;
  std::ostringstream table;
  table.precision(17);
  table << "policy\treplication\tseed\tcount\tmax_wait\tmean_wait\tzero_wait_fraction\t"
           "delay_inequality\n";
  for (PolicyKind policy : plan.policies) {
    for (int k = 0; k < plan.replications; ++k) {
      SimConfig cfg = plan.scenario.config;
      cfg.policy = policy;
      SimSeeds seeds;
      seeds.base = plan.seed_base + static_cast<std::uint64_t>(k);
      const SimTrace trace =
          run_simulation(plan.scenario.spec, cfg, seeds, wants_fcsq ? &basic : nullptr);
      CellResult cell;
      cell.policy = policy;
      cell.replication = k;
      cell.seed = seeds.base;
      cell.summary = summarize(trace);
      table << policy_name(policy) << '\t' << k << '\t' << cell.seed << '\t' << cell.summary.count
            << '\t' << cell.summary.max_wait << '\t' << cell.summary.mean_wait << '\t'
            << cell.summary.zero_wait_fraction << '\t' << cell.summary.delay_inequality << '\n';
      if (writing) {
        std::ostringstream dir_name;
        dir_name << "cell_" << policy_name(policy) << '_' << k;
        const std::filesystem::path cell_dir = out / dir_name.str();
        std::filesystem::create_directories(cell_dir);
        write_file(cell_dir / "summary.txt", to_text(cell.summary));
        write_file(cell_dir / "requests.tsv", requests_tsv(trace));
        write_file(cell_dir / "grid.tsv", grid_tsv(trace));
      }
      result.cells.push_back(std::move(cell));
    }
  }
  result.comparison_tsv = table.str();

  std::ostringstream manifest;
  manifest << "scenario: " << plan.scenario.name << '\n';
  manifest << "policies:";
  for (PolicyKind p : plan.policies) manifest << ' ' << policy_name(p);
  manifest << '\n';
  manifest << "replications: " << plan.replications << '\n';
  manifest << "seed_base: " << plan.seed_base << '\n';
  manifest << "--- scenario ---\n" << to_scenario_text(plan.scenario);
  result.manifest = manifest.str();

  if (writing) {
    write_file(out / "comparison.tsv", result.comparison_tsv);
    write_file(out / "manifest.txt", result.manifest);
    write_file(out / "medians.txt", median_block(result));
  }
  return result;
}

std::string median_block(const ExperimentResult& result) {
  std::ostringstream os;
  os.precision(17);
  // preserve first-seen policy order
  std::vector<PolicyKind> order;
  for (const CellResult& c : result.cells)
    if (std::find(order.begin(), order.end(), c.policy) == order.end()) order.push_back(c.policy);
  for (PolicyKind p : order) {
    std::vector<double> max_wait, mean_wait, zero_frac, inequality;
    for (const CellResult& c : result.cells)
      if (c.policy == p) {
        max_wait.push_back(c.summary.max_wait);
        mean_wait.push_back(c.summary.mean_wait);
        zero_frac.push_back(c.summary.zero_wait_fraction);
        inequality.push_back(c.summary.delay_inequality);
      }
    os << "policy " << policy_name(p) << ": median_max_wait=" << median(max_wait)
       << " median_mean_wait=" << median(mean_wait)
       << " median_zero_wait_fraction=" << median(zero_frac)
       << " median_delay_inequality=" << median(inequality) << '\n';
  }
  return os.str();
}

}  // namespace evroute
