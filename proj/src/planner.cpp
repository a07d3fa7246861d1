#include "evroute/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evroute/rng.hpp"

namespace evroute {

namespace {

/* Lexicographic index of usable activities; all LPs share it. */
struct ActivityIndex {
  std::vector<std::pair<int, int>> list;          // var -> (i, j)
  std::vector<std::vector<int>> var_of;           // I x J, -1 if unusable

  explicit ActivityIndex(const ValidatedSpec& spec) {
    var_of.assign(spec.ev_types(), std::vector<int>(spec.charger_types(), -1));
    for (int i = 0; i < spec.ev_types(); ++i)
      for (int j : spec.stations_for[i]) {
        var_of[i][j] = static_cast<int>(list.size());
        list.emplace_back(i, j);
      }
  }
  int count() const { return static_cast<int>(list.size()); }
};

DenseLp base_lp(const ValidatedSpec& spec, const ActivityIndex& idx, int extra_vars) {
  const int I = spec.ev_types(), J = spec.charger_types();
  DenseLp lp;
  lp.c.assign(idx.count() + extra_vars, 0.0);
  for (int v = 0; v < idx.count(); ++v) {
    auto [i, j] = idx.list[v];
    lp.c[v] = spec.net.costs[i][j];
  }
  lp.a_eq.assign(I, std::vector<double>(idx.count() + extra_vars, 0.0));
  lp.b_eq.assign(I, 0.0);
  for (int i = 0; i < I; ++i) {
    for (int j : spec.stations_for[i]) lp.a_eq[i][idx.var_of[i][j]] = 1.0;
    lp.b_eq[i] = spec.net.arrival_rates[i];
  }
  lp.a_ub.assign(J, std::vector<double>(idx.count() + extra_vars, 0.0));
  lp.b_ub.assign(J, 0.0);
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < I; ++i)
      if (idx.var_of[i][j] >= 0) lp.a_ub[j][idx.var_of[i][j]] = 1.0 / spec.net.service_rates[i][j];
    lp.b_ub[j] = static_cast<double>(spec.net.pool_sizes[j]);
  }
  return lp;
}

Matrix rates_from(const ActivityIndex& idx, const std::vector<double>& x, int I, int J) {
  Matrix rates(I, std::vector<double>(J, 0.0));
  for (int v = 0; v < idx.count(); ++v) {
    auto [i, j] = idx.list[v];
    rates[i][j] = x[v];
  }
  return rates;
}

std::vector<double> loads_from(const ValidatedSpec& spec, const Matrix& rates) {
  const int I = spec.ev_types(), J = spec.charger_types();
  std::vector<double> loads(J, 0.0);
  for (int j = 0; j < J; ++j) {
    double work = 0.0;
    for (int i = 0; i < I; ++i)
      if (spec.is_usable(i, j)) work += rates[i][j] / spec.net.service_rates[i][j];
    loads[j] = work / spec.net.pool_sizes[j];
  }
  return loads;
}

double default_eps_basic(const ValidatedSpec& spec) {
  double mx = 0.0;
  for (double l : spec.net.arrival_rates) mx = std::max(mx, l);
  return 1e-7 * std::max(mx, 1.0);
}

std::vector<char> support_of(const std::vector<double>& x, int n_activities, double eps) {
  std::vector<char> s(n_activities, 0);
  for (int v = 0; v < n_activities; ++v) s[v] = x[v] > eps ? 1 : 0;
  return s;
}

/* Re-solve with a deterministic O(1e-7) cost perturbation; a support change
 * flags a (likely) non-unique optimal plan. */
bool unique_support_check(const ValidatedSpec& spec, const ActivityIndex& idx, DenseLp lp,
                          const std::vector<double>& x_ref) {
  double cmax = 0.0;
  for (int v = 0; v < idx.count(); ++v) cmax = std::max(cmax, std::abs(lp.c[v]));
  RandomStream rng(0x5eedf00d, RandomStream::Kind::aux, 99);
  for (int v = 0; v < idx.count(); ++v) lp.c[v] += 1e-7 * (1.0 + cmax) * rng.uniform01();
  DenseLpResult alt = solve_dense_lp(lp);
  if (alt.status != LpStatus::optimal) return true;  // inconclusive; do not warn
  const double eps = default_eps_basic(spec);
  return support_of(alt.x, idx.count(), eps) == support_of(x_ref, idx.count(), eps);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

ClusterSet ClusterSet::single_all(int charger_types, double weight) {
  ClusterSet cs;
  cs.members.emplace_back();
  for (int j = 0; j < charger_types; ++j) cs.members.back().push_back(j);
  cs.weights.push_back(weight);
  return cs;
}

LpSolution solve_stability_lp(const ValidatedSpec& spec) {
  const ActivityIndex idx(spec);
  DenseLp lp = base_lp(spec, idx, 0);
  DenseLpResult r = solve_dense_lp(lp);

  LpSolution sol;
  sol.status = r.status;
  sol.iterations = r.iterations;
  if (r.status != LpStatus::optimal) return sol;
  sol.primal_rates = rates_from(idx, r.x, spec.ev_types(), spec.charger_types());
  sol.objective = r.objective;
  sol.type_duals = r.dual_eq;
  sol.capacity_duals = r.dual_ub;
  sol.loads = loads_from(spec, sol.primal_rates);
  sol.unique_support_hint = unique_support_check(spec, idx, lp, r.x);
  return sol;
}

LpSolution solve_lb_lp(const ValidatedSpec& spec, const ClusterSet& clusters) {
  const int J = spec.charger_types();
  const int L = clusters.count();
  if (static_cast<int>(clusters.weights.size()) != L)
    throw PolicyError(PolicyError::Code::bad_cluster, "one weight per cluster required");
  for (int l = 0; l < L; ++l) {
    if (clusters.members[l].empty())
      throw PolicyError(PolicyError::Code::bad_cluster, "empty cluster");
    if (!(clusters.weights[l] >= 0.0) || !std::isfinite(clusters.weights[l]))
      throw PolicyError(PolicyError::Code::bad_cluster, "cluster weight must be finite and nonnegative");
    for (size_t k = 0; k < clusters.members[l].size(); ++k) {
      const int j = clusters.members[l][k];
      if (j < 0 || j >= J)
        throw PolicyError(PolicyError::Code::bad_cluster, "cluster station out of range");
      if (k > 0 && j <= clusters.members[l][k - 1])
        throw PolicyError(PolicyError::Code::bad_cluster,
                          "cluster stations must be ascending and distinct");
    }
  }

  const ActivityIndex idx(spec);
  DenseLp lp = base_lp(spec, idx, L);
  for (int l = 0; l < L; ++l) lp.c[idx.count() + l] = clusters.weights[l];

  // rho_l >= per-member load: sum_i x_ij/(N_j mu_ij) - rho_l <= 0
  std::vector<std::pair<int, int>> load_rows;  // (cluster, station)
  for (int l = 0; l < L; ++l) {
    for (int j : clusters.members[l]) {
      std::vector<double> row(idx.count() + L, 0.0);
      for (int i = 0; i < spec.ev_types(); ++i)
        if (idx.var_of[i][j] >= 0)
          row[idx.var_of[i][j]] = 1.0 / (spec.net.pool_sizes[j] * spec.net.service_rates[i][j]);
      row[idx.count() + l] = -1.0;
      lp.a_ub.push_back(std::move(row));
      lp.b_ub.push_back(0.0);
      load_rows.emplace_back(l, j);
    }
  }

  DenseLpResult r = solve_dense_lp(lp);
  LpSolution sol;
  sol.status = r.status;
  sol.iterations = r.iterations;
  if (r.status != LpStatus::optimal) return sol;
  sol.primal_rates = rates_from(idx, r.x, spec.ev_types(), spec.charger_types());
  sol.objective = r.objective;
  sol.type_duals = r.dual_eq;
  sol.capacity_duals.assign(r.dual_ub.begin(), r.dual_ub.begin() + J);
  sol.loads = loads_from(spec, sol.primal_rates);
  sol.rho_star.assign(L, 0.0);
  for (int l = 0; l < L; ++l) sol.rho_star[l] = r.x[idx.count() + l];
  for (size_t k = 0; k < load_rows.size(); ++k)
    sol.load_duals.push_back({load_rows[k].first, load_rows[k].second, r.dual_ub[J + k]});
  {
    DenseLp ref = base_lp(spec, idx, L);
    for (int l = 0; l < L; ++l) ref.c[idx.count() + l] = clusters.weights[l];
    ref.a_ub = lp.a_ub;
    ref.b_ub = lp.b_ub;
    sol.unique_support_hint = unique_support_check(spec, idx, std::move(ref), r.x);
  }
  return sol;
}

bool BasicActivityGraph::has_edge(int i, int j) const {
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

BasicActivityGraph extract_basic_activities(const LpSolution& sol, const ValidatedSpec& spec,
                                            double eps_basic) {
  const int I = spec.ev_types(), J = spec.charger_types();
  if (eps_basic < 0.0) eps_basic = default_eps_basic(spec);

  BasicActivityGraph g;
  g.ev_types = I;
  g.charger_types = J;
  g.stations_of.assign(I, {});
  g.types_of.assign(J, {});
  if (sol.status != LpStatus::optimal) {
    g.component.assign(I + J, 0);
    std::iota(g.component.begin(), g.component.end(), 0);
    g.n_components = I + J;
    return g;
  }
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (spec.is_usable(i, j) && sol.primal_rates[i][j] > eps_basic) {
        g.edges.emplace_back(i, j);
        g.stations_of[i].push_back(j);
        g.types_of[j].push_back(i);
      }

  UnionFind uf(I + J);
  for (auto [i, j] : g.edges) uf.unite(i, I + j);
  g.component.assign(I + J, -1);
  int next = 0;
  for (int v = 0; v < I + J; ++v) {
    const int root = uf.find(v);
    if (g.component[root] < 0) g.component[root] = next++;
    g.component[v] = g.component[root];
  }
  g.n_components = next;

  // Acyclic over incident vertices: E = V_incident - C_incident.
  std::vector<char> incident(I + J, 0);
  for (auto [i, j] : g.edges) {
    incident[i] = 1;
    incident[I + j] = 1;
  }
  int v_inc = 0;
  std::vector<char> comp_seen(I + J, 0);
  int c_inc = 0;
  for (int v = 0; v < I + J; ++v) {
    if (!incident[v]) continue;
    ++v_inc;
    if (!comp_seen[g.component[v]]) {
      comp_seen[g.component[v]] = 1;
      ++c_inc;
    }
  }
  g.is_forest = static_cast<int>(g.edges.size()) == v_inc - c_inc;
  return g;
}

FeasibleRegionReport feasible_region_membership(const ValidatedSpec& spec) {
  FeasibleRegionReport rep;
  LpSolution sol = solve_stability_lp(spec);
  rep.status = sol.status;
  if (sol.status != LpStatus::optimal) return rep;

  // Maximize the worst-station slack over the cost-optimal face.
  const ActivityIndex idx(spec);
  const int J = spec.charger_types();
  DenseLp lp = base_lp(spec, idx, 1);
  const int dvar = idx.count();
  for (int v = 0; v < idx.count(); ++v) lp.c[v] = 0.0;
  lp.c[dvar] = -1.0;  // maximize delta
  for (int j = 0; j < J; ++j) lp.a_ub[j][dvar] = 1.0;
  std::vector<double> cost_row(idx.count() + 1, 0.0);
  for (int v = 0; v < idx.count(); ++v) {
    auto [i, j] = idx.list[v];
    cost_row[v] = spec.net.costs[i][j];
  }
  lp.a_ub.push_back(std::move(cost_row));
  lp.b_ub.push_back(sol.objective + 1e-9 * (1.0 + std::abs(sol.objective)));

  DenseLpResult r = solve_dense_lp(lp);
  if (r.status != LpStatus::optimal)
    throw SolverError(SolverError::Code::numerical_failure, "slack LP failed on a feasible instance");
  rep.max_min_slack = r.x[dvar];
  int n_max = 1;
  for (int j = 0; j < J; ++j) n_max = std::max(n_max, spec.net.pool_sizes[j]);
  rep.in_region = rep.max_min_slack > 1e-9 * n_max;
  rep.slack.assign(J, 0.0);
  const Matrix rates = rates_from(idx, r.x, spec.ev_types(), J);
  const std::vector<double> loads = loads_from(spec, rates);
  for (int j = 0; j < J; ++j) rep.slack[j] = spec.net.pool_sizes[j] * (1.0 - loads[j]);
  return rep;
}

namespace {
const char* status_name(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}
}  // namespace

std::string to_text(const LpSolution& sol) {
  std::ostringstream os;
  os.precision(17);
  os << "status " << status_name(sol.status) << "\n";
  if (sol.status != LpStatus::optimal) return os.str();
  os << "objective " << sol.objective << "\n";
  os << "rates";
  for (const auto& row : sol.primal_rates)
    for (double x : row) os << ' ' << x;
  os << "\ncapacity_duals";
  for (double q : sol.capacity_duals) os << ' ' << q;
  os << "\ntype_duals";
  for (double u : sol.type_duals) os << ' ' << u;
  os << "\nloads";
  for (double l : sol.loads) os << ' ' << l;
  os << "\n";
  if (!sol.rho_star.empty()) {
    os << "rho_star";
    for (double r : sol.rho_star) os << ' ' << r;
    os << "\n";
    for (const LoadDual& d : sol.load_duals)
      os << "load_dual " << (d.cluster + 1) << ' ' << (d.station + 1) << ' ' << d.value << "\n";
  }
  os << "unique_support " << (sol.unique_support_hint ? 1 : 0) << "\n";
  os << "iterations " << sol.iterations << "\n";
  return os.str();
}

std::string to_text(const BasicActivityGraph& g) {
  std::ostringstream os;
  os << "edges " << g.edges.size() << "\n";
  for (auto [i, j] : g.edges) os << "edge " << (i + 1) << ' ' << (j + 1) << "\n";
  os << "components " << g.n_components << "\n";
  os << "forest " << (g.is_forest ? 1 : 0) << "\n";
  return os.str();
}

std::string to_text(const FeasibleRegionReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "status " << status_name(rep.status) << "\n";
  os << "in_region " << (rep.in_region ? 1 : 0) << "\n";
  if (rep.status == LpStatus::optimal) {
    os << "max_min_slack " << rep.max_min_slack << "\n";
    os << "slack";
    for (double s : rep.slack) os << ' ' << s;
    os << "\n";
  }
  return os.str();
}

}  // namespace evroute
