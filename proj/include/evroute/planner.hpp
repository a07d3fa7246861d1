#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evroute/lp.hpp"
#include "evroute/network.hpp"

namespace evroute {

/* Station clusters for the load-balancing objective. members[l] lists
 * station indices (0-based, ascending, no duplicates within a cluster;
 * clusters may overlap); weights[l] = W_l >= 0. */
struct ClusterSet {
  std::vector<std::vector<int>> members;
  std::vector<double> weights;

  int count() const { return static_cast<int>(members.size()); }
  static ClusterSet single_all(int charger_types, double weight);
};

struct LoadDual {
  int cluster;
  int station;
  double value;  // >= 0; per cluster them sum to W_l at an optimum
};

/* Routing-rate plan. primal_rates is I x J with zeros on unusable pairs.
 * loads[j] = sum_i rate_ij / (N_j mu_ij). For the load-balancing variant,
 * rho_star[l] is the optimal cluster load bound and load_duals carries one
 * entry per (cluster, member station). */
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Matrix primal_rates;
  double objective = 0.0;
  std::vector<double> capacity_duals;  // q*_j >= 0
  std::vector<double> type_duals;      // u_i, free sign
  std::vector<double> loads;           // rho_j
  std::vector<double> rho_star;        // per cluster (LB variant only)
  std::vector<LoadDual> load_duals;    // LB variant only
  bool unique_support_hint = true;     // false: perturbation found another optimal support
  int iterations = 0;
};

/* Minimum-cost routing-rate LP: min sum c_i(j) r_ij subject to
 * sum_j r_ij = lambda_i, sum_i r_ij / mu_ij <= N_j, r >= 0, over usable
 * activities only. Duals of the capacity rows are the q*_j. */
LpSolution solve_stability_lp(const ValidatedSpec& spec);

/* Load-balancing variant: adds one variable rho_l per cluster, constraints
 * rho_l >= sum_i r_ij / (N_j mu_ij) for each member j, and W_l rho_l in the
 * objective. */
LpSolution solve_lb_lp(const ValidatedSpec& spec, const ClusterSet& clusters);

/* Bipartite graph of activities carrying positive optimal rate. Vertex ids:
 * EV type i -> i, station j -> ev_types + j. */
struct BasicActivityGraph {
  int ev_types = 0;
  int charger_types = 0;
  std::vector<std::pair<int, int>> edges;        // (i, j), lexicographic
  std::vector<int> component;                     // per vertex, size I+J
  int n_components = 0;                           // including isolated singletons
  bool is_forest = true;                          // false => cycle among basic activities
  std::vector<std::vector<int>> stations_of;      // per type, ascending
  std::vector<std::vector<int>> types_of;         // per station, ascending

  bool has_edge(int i, int j) const;
};

/* Edges are activities with rate > eps_basic; eps_basic defaults to
 * 1e-7 * max_i lambda_i. A cyclic result is reported via is_forest = false
 * (a warning condition: flow-map construction refuses such graphs). */
BasicActivityGraph extract_basic_activities(const LpSolution& sol, const ValidatedSpec& spec,
                                            double eps_basic = -1.0);

/* Membership test for the stability region: the demand vector is inside iff
 * the LP is feasible and some cost-optimal plan leaves strictly positive
 * capacity slack at every station (max-min-slack LP over the optimal face). */
struct FeasibleRegionReport {
  bool in_region = false;
  LpStatus status = LpStatus::infeasible;
  double max_min_slack = 0.0;       // optimal value of the secondary LP
  std::vector<double> slack;        // per-station slack at the maximizing plan
};

FeasibleRegionReport feasible_region_membership(const ValidatedSpec& spec);

std::string to_text(const LpSolution& sol);
std::string to_text(const BasicActivityGraph& graph);
std::string to_text(const FeasibleRegionReport& report);

}  // namespace evroute
