#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evroute/engine.hpp"
#include "evroute/planner.hpp"

namespace evroute {

/* Square-root staffing schedule: at scale r the demand vector becomes
 * r * lambda, pool j gets round(r N_j + sqrt(r) n_j) chargers, and the
 * price parameter becomes beta^r = r^(-f_exponent) with
 * f_exponent in (1/2, 1), so that sqrt(r) << 1/beta^r << r. */
struct ScalingSchedule {
  double r = 1.0;
  double f_exponent = 0.75;
  std::vector<double> staffing_slack;  // n_j; empty = all zeros

  double beta() const;
  long scaled_pool(int base_pool, double slack) const;
};

/* Scaled copy of the base network. Throws AnalysisError::non_positive_pool
 * when rounding drops a pool below one charger. */
ValidatedSpec make_scaled_system(const ValidatedSpec& base, const ScalingSchedule& sched);

/* Linear map from per-type demand deviations v in R^I to per-basic-activity
 * flow deviations w, defined by
 *   sum_j w_ij = v_i                     (per EV type with basic activities)
 *   (sum_i' w_i'j / mu_i'j) / mu_ij  equal across the basic activities
 *                                     (i,j), (i,j') of each EV type
 * Built by leaf elimination on the basic-activity forest; unique there. */
struct FlowDeviationMap {
  std::vector<std::pair<int, int>> edges;   // basic activities, lexicographic
  int ev_types = 0;
  Matrix coeff;  // |edges| x I: w = coeff . v

  std::vector<double> apply(const std::vector<double>& v) const;  // dimension_mismatch
};

/* Throws AnalysisError: not_a_forest, zero_rate_edge. */
FlowDeviationMap build_flow_deviation_map(const BasicActivityGraph& graph, const Matrix& mu);

/* Diffusion-scaled deviation series on the trace's sampling grid:
 *   q_dev[k][j]  = r^{-1/2} (Q_j(t_k) - q*_j / beta^r)
 *   flow_dev[k][e] = r^{-1/2} (A_e(t_k) - r lambda*_e t_k)
 * Activities are the basic edges of `sol`'s graph. */
struct DeviationSeries {
  double r = 1.0;
  double beta = 1.0;
  std::vector<double> t;
  std::vector<std::pair<int, int>> edges;
  Matrix q_dev;     // T x J
  Matrix flow_dev;  // T x |edges|
};

DeviationSeries compute_deviations(const SimTrace& trace, const LpSolution& sol,
                                   const BasicActivityGraph& graph, const ScalingSchedule& sched,
                                   const std::vector<double>* grid = nullptr);

/* Dual-tracking and support diagnostics for one scaled run:
 * sup_dual_gap = max_j sup_t |beta^r Q_j(t) - q*_j| over the grid;
 * nonbasic_fraction = share of arrivals routed outside the basic edges.
 * vacuous = trace carried no arrivals. Throws infeasible_solution. */
struct ScaledRunCheck {
  double sup_dual_gap = 0.0;
  double nonbasic_fraction = 0.0;
  bool vacuous = false;
};

ScaledRunCheck evaluate_scaled_run(const SimTrace& trace, const LpSolution& sol,
                                   const BasicActivityGraph& graph, const ScalingSchedule& sched);

/* Price-convergence diagnosis across runs with decreasing beta. Each run
 * contributes the time average of beta Q_j over its final half horizon and
 * the empirical routing rates over the full arrival window. */
struct ConvergenceRun {
  double beta = 0.0;
  double horizon = 0.0;
  std::vector<double> avg_beta_q;  // per station, final half horizon
  Matrix rates;                    // I x J
  double dual_gap = 0.0;           // max_j |avg beta Q_j - q*_j|
  double rate_tv = 0.0;            // 0.5 sum_ij |rate - lambda*|
  bool diverging = false;          // final-half level still growing
};

struct ConvergenceInput {
  double beta = 0.0;
  const SimTrace* trace = nullptr;
};

struct ConvergenceReport {
  std::vector<ConvergenceRun> runs;  // sorted by decreasing beta
  bool dual_gap_improved = false;    // smallest beta beats largest
  bool rate_tv_improved = false;
};

/* Throws AnalysisError::insufficient_horizon when a run's arrival window is
 * shorter than 10/beta, and infeasible_solution for a non-optimal sol. */
ConvergenceReport diagnose_convergence(const std::vector<ConvergenceInput>& runs,
                                       const LpSolution& sol);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

std::string deviations_tsv(const DeviationSeries& dev);
std::string to_text(const ConvergenceReport& report);

}  // namespace evroute
