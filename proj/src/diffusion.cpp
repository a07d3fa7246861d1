#include "evroute/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

namespace evroute {

namespace {

void require_exponent(double f) {
  if (!(f > 0.5) || !(f < 1.0))
    throw std::invalid_argument("scaling exponent must lie strictly between 1/2 and 1");
}

void require_optimal(const LpSolution& sol) {
  if (sol.status != LpStatus::optimal)
    throw AnalysisError(AnalysisError::Code::infeasible_solution,
                        "analysis needs an optimal plan for the base system");
}

}  // namespace

double ScalingSchedule::beta() const {
  if (!(r > 0.0)) throw std::invalid_argument("scale r must be positive");
  require_exponent(f_exponent);
  return std::pow(r, -f_exponent);
}

long ScalingSchedule::scaled_pool(int base_pool, double slack) const {
  if (!(r > 0.0)) throw std::invalid_argument("scale r must be positive");
  const long n = std::llround(r * static_cast<double>(base_pool) + std::sqrt(r) * slack);
  if (n < 1)
    throw AnalysisError(AnalysisError::Code::non_positive_pool,
                        "scaled pool size rounds below one charger");
  return n;
}

ValidatedSpec make_scaled_system(const ValidatedSpec& base, const ScalingSchedule& sched) {
  require_exponent(sched.f_exponent);
  const int J = base.charger_types();
  if (!sched.staffing_slack.empty() && static_cast<int>(sched.staffing_slack.size()) != J)
    throw AnalysisError(AnalysisError::Code::dimension_mismatch,
                        "staffing slack vector has wrong length");
  NetworkSpec net = base.net;
  for (double& v : net.arrival_rates) v *= sched.r;
  for (int j = 0; j < J; ++j) {
    const double slack = sched.staffing_slack.empty() ? 0.0 : sched.staffing_slack[j];
    net.pool_sizes[j] = static_cast<int>(sched.scaled_pool(base.net.pool_sizes[j], slack));
  }
  return validate_spec(net);
}

std::vector<double> FlowDeviationMap::apply(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != ev_types)
    throw AnalysisError(AnalysisError::Code::dimension_mismatch,
                        "demand deviation vector has wrong length");
  std::vector<double> w(edges.size(), 0.0);
  for (size_t e = 0; e < edges.size(); ++e)
    for (int i = 0; i < ev_types; ++i) w[e] += coeff[e][i] * v[i];
  return w;
}

FlowDeviationMap build_flow_deviation_map(const BasicActivityGraph& graph, const Matrix& mu) {
  if (!graph.is_forest)
    throw AnalysisError(AnalysisError::Code::not_a_forest,
                        "flow deviation map needs an acyclic basic-activity graph");
  const int I = graph.ev_types;
  const int J = graph.charger_types;
  const int E = static_cast<int>(graph.edges.size());
  if (static_cast<int>(mu.size()) != I)
    throw AnalysisError(AnalysisError::Code::dimension_mismatch, "service-rate matrix has wrong shape");
  for (const auto& row : mu)
    if (static_cast<int>(row.size()) != J)
      throw AnalysisError(AnalysisError::Code::dimension_mismatch,
                          "service-rate matrix has wrong shape");
  for (const auto& [i, j] : graph.edges)
    if (!(mu[i][j] > 0.0))
      throw AnalysisError(AnalysisError::Code::zero_rate_edge,
                          "basic activity with zero service rate");

  FlowDeviationMap map;
  map.edges = graph.edges;
  map.ev_types = I;
  map.coeff.assign(E, std::vector<double>(I, 0.0));
  if (E == 0) return map;

  // Vertices 0..I-1 are EV types, I..I+J-1 stations.
  const int V = I + J;
  std::vector<std::vector<int>> incident(V);
  for (int e = 0; e < E; ++e) {
    incident[graph.edges[e].first].push_back(e);
    incident[I + graph.edges[e].second].push_back(e);
  }

  /* Parametrize each component by a scalar t: station throughput deviations
   * are gamma_j t and EV-type "work shares" gamma_i t, linked across a basic
   * edge (i,j) by gamma_{I+j} = mu_ij gamma_i (the equal-imbalance rule). */
  std::vector<double> gamma(V, 0.0);
  std::vector<char> seen(V, 0);
  for (int v = 0; v < V; ++v) {
    if (incident[v].empty() || seen[v]) continue;
    seen[v] = 1;
    gamma[v] = 1.0;
    std::vector<int> stack{v};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int e : incident[u]) {
        const auto [i, j] = graph.edges[e];
        const int other = (u == i) ? I + j : i;
        if (seen[other]) continue;
        seen[other] = 1;
        gamma[other] = (other >= I) ? mu[i][j] * gamma[u] : gamma[u] / mu[i][j];
        stack.push_back(other);
      }
    }
  }

  /* Peel leaves. Each peel spends one vertex equation to solve its last
   * edge as (row over v) + (coefficient) * t; per tree exactly one incident
   * vertex keeps an unspent equation, which then pins t linearly in v. */
  Matrix a(E, std::vector<double>(I, 0.0));
  std::vector<double> b(E, 0.0);
  std::vector<char> edge_done(E, 0);
  std::vector<char> consumed(V, 0);
  std::vector<int> degree(V, 0);
  for (int v = 0; v < V; ++v) degree[v] = static_cast<int>(incident[v].size());

  std::priority_queue<int, std::vector<int>, std::greater<int>> leaves;
  for (int v = 0; v < V; ++v)
    if (degree[v] == 1) leaves.push(v);
  while (!leaves.empty()) {
    const int u = leaves.top();
    leaves.pop();
    if (degree[u] != 1) continue;  // stale entry
    int e = -1;
    for (int f : incident[u])
      if (!edge_done[f]) {
        e = f;
        break;
      }
    if (e < 0) continue;
    const auto [i, j] = graph.edges[e];
    if (u < I) {
      // EV-type balance: sum of the type's edge flows equals v_i.
      double acc_b = 0.0;
      for (int f : incident[u])
        if (f != e && edge_done[f]) {
          for (int k = 0; k < I; ++k) a[e][k] -= a[f][k];
          acc_b -= b[f];
        }
      a[e][i] += 1.0;
      b[e] = acc_b;
    } else {
      // Station throughput: sum of w_f / mu_f over the pool equals gamma_u t.
      const double mu_e = mu[i][j];
      double acc_b = 0.0;
      for (int f : incident[u])
        if (f != e && edge_done[f]) {
          const double mu_f = mu[graph.edges[f].first][graph.edges[f].second];
          for (int k = 0; k < I; ++k) a[e][k] -= mu_e * a[f][k] / mu_f;
          acc_b -= mu_e * b[f] / mu_f;
        }
      b[e] = acc_b + mu_e * gamma[u];
    }
    edge_done[e] = 1;
    consumed[u] = 1;
    degree[u] = 0;
    const int other = (u == i) ? I + j : i;
    degree[other] -= 1;
    if (degree[other] == 1) leaves.push(other);
  }
  for (int e = 0; e < E; ++e)
    if (!edge_done[e])
      throw SolverError(SolverError::Code::numerical_failure, "leaf elimination left edges unresolved");

  // Pin t per component from its unspent vertex equation, then substitute.
  std::vector<int> pin_of_comp(graph.n_components, -1);
  for (int v = 0; v < V; ++v)
    if (!incident[v].empty() && !consumed[v]) {
      if (pin_of_comp[graph.component[v]] != -1)
        throw SolverError(SolverError::Code::numerical_failure,
                          "component carries more than one unspent equation");
      pin_of_comp[graph.component[v]] = v;
    }
  std::vector<std::vector<double>> t_of_comp(graph.n_components);
  for (int c = 0; c < graph.n_components; ++c) {
    const int u = pin_of_comp[c];
    if (u < 0) continue;  // component without edges
    std::vector<double> num(I, 0.0);
    double denom = 0.0;
    if (u < I) {
      // sum_f (a_f + b_f t) = e_u  =>  t = (e_u - sum a_f) / sum b_f
      for (int f : incident[u]) {
        for (int k = 0; k < I; ++k) num[k] -= a[f][k];
        denom += b[f];
      }
      num[u] += 1.0;
    } else {
      // sum_f (a_f + b_f t) / mu_f = gamma_u t
      for (int f : incident[u]) {
        const double mu_f = mu[graph.edges[f].first][graph.edges[f].second];
        for (int k = 0; k < I; ++k) num[k] += a[f][k] / mu_f;
        denom -= b[f] / mu_f;
      }
      denom += gamma[u];  // t (gamma_u - sum b/mu) = sum a/mu
    }
    if (std::abs(denom) < 1e-12)
      throw SolverError(SolverError::Code::numerical_failure, "degenerate component equation");
    for (int k = 0; k < I; ++k) num[k] /= denom;
    t_of_comp[c] = std::move(num);
  }
  for (int e = 0; e < E; ++e) {
    const int c = graph.component[graph.edges[e].first];
    const std::vector<double>& t = t_of_comp[c];
    for (int k = 0; k < I; ++k) map.coeff[e][k] = a[e][k] + b[e] * t[k];
  }
  return map;
}

DeviationSeries compute_deviations(const SimTrace& trace, const LpSolution& sol,
                                   const BasicActivityGraph& graph, const ScalingSchedule& sched,
                                   const std::vector<double>* grid) {
  require_optimal(sol);
  const int J = trace.charger_types;
  if (static_cast<int>(sol.capacity_duals.size()) != J ||
      static_cast<int>(sol.primal_rates.size()) != trace.ev_types)
    throw AnalysisError(AnalysisError::Code::dimension_mismatch,
                        "plan and trace describe different networks");
  if (trace.grid.empty())
    throw AnalysisError(AnalysisError::Code::grid_out_of_range, "trace carries no grid samples");

  std::vector<const GridSample*> samples;
  if (grid == nullptr) {
    samples.reserve(trace.grid.size());
    for (const GridSample& s : trace.grid) samples.push_back(&s);
  } else {
    for (double t : *grid) {
      const GridSample* hit = nullptr;
      // trace.grid ascends in t
      auto it = std::lower_bound(trace.grid.begin(), trace.grid.end(), t - 1e-9,
                                 [](const GridSample& s, double val) { return s.t < val; });
      if (it != trace.grid.end() && std::abs(it->t - t) <= 1e-9) hit = &*it;
      if (hit == nullptr) {
        std::ostringstream os;
        os.precision(17);
        os << "requested time " << t << " is not on the trace grid";
        throw AnalysisError(AnalysisError::Code::grid_out_of_range, os.str());
      }
      samples.push_back(hit);
    }
  }

  DeviationSeries dev;
  dev.r = sched.r;
  dev.beta = sched.beta();
  dev.edges = graph.edges;
  const double inv_sqrt_r = 1.0 / std::sqrt(sched.r);
  dev.t.reserve(samples.size());
  dev.q_dev.reserve(samples.size());
  dev.flow_dev.reserve(samples.size());
  for (const GridSample* s : samples) {
    dev.t.push_back(s->t);
    std::vector<double> qrow(J, 0.0);
    for (int j = 0; j < J; ++j)
      qrow[j] = inv_sqrt_r * (s->virtual_q[j] - sol.capacity_duals[j] / dev.beta);
    dev.q_dev.push_back(std::move(qrow));
    std::vector<double> frow(graph.edges.size(), 0.0);
    for (size_t e = 0; e < graph.edges.size(); ++e) {
      const auto [i, j] = graph.edges[e];
      const double centered = static_cast<double>(s->routed[static_cast<size_t>(i) * J + j]) -
                              sched.r * sol.primal_rates[i][j] * s->t;
      frow[e] = inv_sqrt_r * centered;
    }
    dev.flow_dev.push_back(std::move(frow));
  }
  return dev;
}

ScaledRunCheck evaluate_scaled_run(const SimTrace& trace, const LpSolution& sol,
                                   const BasicActivityGraph& graph, const ScalingSchedule& sched) {
  require_optimal(sol);
  ScaledRunCheck check;
  if (trace.requests.empty() || trace.grid.empty()) {
    check.vacuous = true;
    return check;
  }
  const double beta = sched.beta();
  const int J = trace.charger_types;
  for (const GridSample& s : trace.grid)
    for (int j = 0; j < J; ++j)
      check.sup_dual_gap =
          std::max(check.sup_dual_gap, std::abs(beta * s.virtual_q[j] - sol.capacity_duals[j]));
  long nonbasic = 0;
  for (const RequestRecord& r : trace.requests)
    if (!graph.has_edge(r.ev_type, r.station)) ++nonbasic;
  check.nonbasic_fraction =
      static_cast<double>(nonbasic) / static_cast<double>(trace.requests.size());
  return check;
}

namespace {

/* Time average of beta Q_j over [grid[h].t, grid[e].t] from the exact
 * running integrals carried by the grid samples. */
std::vector<double> window_average(const SimTrace& trace, size_t h, size_t e, double beta) {
  const GridSample& lo = trace.grid[h];
  const GridSample& hi = trace.grid[e];
  const double span = hi.t - lo.t;
  std::vector<double> avg(trace.charger_types, 0.0);
  for (int j = 0; j < trace.charger_types; ++j)
    avg[j] = beta * (hi.virtual_q_integral[j] - lo.virtual_q_integral[j]) / span;
  return avg;
}

size_t first_sample_at_or_after(const SimTrace& trace, double t) {
  size_t k = 0;
  while (k < trace.grid.size() && trace.grid[k].t < t - 1e-12) ++k;
  return k;
}

}  // namespace

ConvergenceReport diagnose_convergence(const std::vector<ConvergenceInput>& inputs,
                                       const LpSolution& sol) {
  require_optimal(sol);
  ConvergenceReport report;
  for (const ConvergenceInput& in : inputs) {
    if (!(in.beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (in.trace == nullptr) throw std::invalid_argument("missing trace");
    const SimTrace& trace = *in.trace;
    ConvergenceRun run;
    run.beta = in.beta;
    run.horizon = trace.arrival_window_end;
    if (run.horizon < 10.0 / in.beta - 1e-9) {
      std::ostringstream os;
      os.precision(6);
      os << "horizon " << run.horizon << " is shorter than 10/beta = " << (10.0 / in.beta);
      throw AnalysisError(AnalysisError::Code::insufficient_horizon, os.str());
    }
    const size_t quarter = first_sample_at_or_after(trace, run.horizon / 4.0);
    const size_t half = first_sample_at_or_after(trace, run.horizon / 2.0);
    const size_t last = trace.grid.size() - 1;
    if (trace.grid.empty() || half >= last || quarter >= half)
      throw AnalysisError(AnalysisError::Code::insufficient_horizon,
                          "too few grid samples to window the run");

    run.avg_beta_q = window_average(trace, half, last, in.beta);
    double gap = 0.0;
    for (int j = 0; j < trace.charger_types; ++j)
      gap = std::max(gap, std::abs(run.avg_beta_q[j] - sol.capacity_duals[j]));
    run.dual_gap = gap;

    run.rates.assign(trace.ev_types, std::vector<double>(trace.charger_types, 0.0));
    double tv = 0.0;
    for (int i = 0; i < trace.ev_types; ++i)
      for (int j = 0; j < trace.charger_types; ++j) {
        run.rates[i][j] = static_cast<double>(trace.routed(i, j)) / run.horizon;
        tv += std::abs(run.rates[i][j] - sol.primal_rates[i][j]);
      }
    run.rate_tv = 0.5 * tv;

    const std::vector<double> early = window_average(trace, quarter, half, in.beta);
    double level1 = 0.0, level2 = 0.0;
    for (int j = 0; j < trace.charger_types; ++j) {
      level1 = std::max(level1, early[j]);
      level2 = std::max(level2, run.avg_beta_q[j]);
    }
    double qmax = 0.0;
    for (double v : sol.capacity_duals) qmax = std::max(qmax, std::abs(v));
    run.diverging = level2 > 1.5 * level1 + 0.02 * (1.0 + qmax);
    report.runs.push_back(std::move(run));
  }
  std::sort(report.runs.begin(), report.runs.end(),
            [](const ConvergenceRun& x, const ConvergenceRun& y) { return x.beta > y.beta; });
  if (report.runs.size() >= 2) {
    report.dual_gap_improved = report.runs.back().dual_gap < report.runs.front().dual_gap;
    report.rate_tv_improved = report.runs.back().rate_tv < report.runs.front().rate_tv;
  }
  return report;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear fit needs two equal-length samples or more");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx, dy = y[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit fit;
  if (sxx <= 0.0) {
    fit.slope = 0.0;
    fit.intercept = my;
    fit.r2 = 0.0;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy <= 0.0) {
    fit.r2 = 1.0;  // constant series, perfectly reproduced
  } else {
    double ss_res = 0.0;
    for (size_t k = 0; k < x.size(); ++k) {
      const double resid = y[k] - (fit.intercept + fit.slope * x[k]);
      ss_res += resid * resid;
    }
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

std::string deviations_tsv(const DeviationSeries& dev) {
  std::ostringstream os;
  os.precision(17);
  os << "r\tbeta\tseries\tindex\tt\tvalue\n";
  for (size_t k = 0; k < dev.t.size(); ++k) {
    for (size_t j = 0; j < dev.q_dev[k].size(); ++j)
      os << dev.r << '\t' << dev.beta << "\tq\t" << (j + 1) << '\t' << dev.t[k] << '\t'
         << dev.q_dev[k][j] << '\n';
    for (size_t e = 0; e < dev.edges.size(); ++e)
      os << dev.r << '\t' << dev.beta << "\tflow\t" << (dev.edges[e].first + 1) << '-'
         << (dev.edges[e].second + 1) << '\t' << dev.t[k] << '\t' << dev.flow_dev[k][e] << '\n';
  }
  return os.str();
}

std::string to_text(const ConvergenceReport& report) {
  std::ostringstream os;
  os.precision(6);
  os << "beta\thorizon\tdual_gap\trate_tv\tdiverging\n";
  for (const ConvergenceRun& run : report.runs)
    os << run.beta << '\t' << run.horizon << '\t' << run.dual_gap << '\t' << run.rate_tv << '\t'
       << (run.diverging ? "yes" : "no") << '\n';
  os << "dual_gap_improved: " << (report.dual_gap_improved ? "yes" : "no") << '\n';
  os << "rate_tv_improved: " << (report.rate_tv_improved ? "yes" : "no") << '\n';
  return os.str();
}

}  // namespace evroute
