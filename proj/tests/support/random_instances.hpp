#pragma once

/* Randomized test instances. Everything is driven by a caller-seeded
 * std::mt19937 so failures replay exactly. */

#include <algorithm>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "evroute/network.hpp"
#include "evroute/planner.hpp"

namespace test_instances {

inline double uniform(std::mt19937& g, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(g() >> 5) / 134217728.0);  // 27-bit mantissa
}

inline int uniform_int(std::mt19937& g, int lo, int hi) {
  return lo + static_cast<int>(g() % static_cast<unsigned>(hi - lo + 1));
}

/* Small network with at most `max_activities` usable pairs, every EV type
 * keeping at least one usable station. Demand is scaled so total work sits
 * at `load_factor` of total capacity (load_factor > 1 gives infeasible
 * planning instances; values well below 1 keep simulations short). */
inline evroute::ValidatedSpec random_network(std::mt19937& g, int max_activities = 6,
                                             double load_factor = 0.6) {
  while (true) {
    const int I = uniform_int(g, 1, 3);
    const int J = uniform_int(g, 1, 3);
    evroute::NetworkSpec net;
    net.ev_types = I;
    net.charger_types = J;
    net.service_rates.assign(I, std::vector<double>(J, 0.0));
    net.costs.assign(I, std::vector<double>(J, evroute::kUnreachable));
    net.pool_sizes.assign(J, 0);
    for (int j = 0; j < J; ++j) net.pool_sizes[j] = uniform_int(g, 1, 4);

    int usable = 0;
    for (int i = 0; i < I; ++i) {
      bool any = false;
      for (int j = 0; j < J; ++j) {
        const bool on = uniform(g, 0.0, 1.0) < 0.7 || (!any && j == J - 1);
        if (!on) continue;
        net.service_rates[i][j] = uniform(g, 0.5, 3.0);
        net.costs[i][j] = uniform(g, 0.0, 1.0) < 0.25 ? 0.0 : uniform(g, 0.0, 5.0);
        any = true;
        ++usable;
      }
    }
    // trim extras beyond the activity budget, keeping one per type
    for (int i = 0; i < I && usable > max_activities; ++i)
      for (int j = 0; j < J && usable > max_activities; ++j) {
        if (!(net.service_rates[i][j] > 0.0)) continue;
        int type_count = 0;
        for (int j2 = 0; j2 < J; ++j2)
          if (net.service_rates[i][j2] > 0.0) ++type_count;
        if (type_count <= 1) continue;
        net.service_rates[i][j] = 0.0;
        net.costs[i][j] = evroute::kUnreachable;
        --usable;
      }

    // capacity each type can reach, then scale demand against total capacity
    double capacity = 0.0;
    for (int j = 0; j < J; ++j) {
      double best_mu = 0.0;
      for (int i = 0; i < I; ++i) best_mu = std::max(best_mu, net.service_rates[i][j]);
      capacity += net.pool_sizes[j] * best_mu;
    }
    net.arrival_rates.assign(I, 0.0);
    double weight_sum = 0.0;
    std::vector<double> weight(I, 0.0);
    for (int i = 0; i < I; ++i) {
      weight[i] = uniform(g, 0.2, 1.0);
      weight_sum += weight[i];
    }
    for (int i = 0; i < I; ++i)
      net.arrival_rates[i] = load_factor * capacity * weight[i] / weight_sum;
    try {
      return evroute::validate_spec(net);
    } catch (const evroute::SpecError&) {
      continue;  // rare degenerate draw; resample
    }
  }
}

/* The planning LP for a validated network, assembled directly from its
 * definition (independently of the library's own construction): one variable
 * per usable activity in (i,j) lexicographic order, demand equalities for
 * all types, capacity inequalities for all stations. */
inline evroute::DenseLp planning_lp_of(const evroute::ValidatedSpec& spec,
                                       std::vector<std::pair<int, int>>* order = nullptr) {
  const int I = spec.ev_types();
  const int J = spec.charger_types();
  std::vector<std::pair<int, int>> acts;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (spec.is_usable(i, j)) acts.emplace_back(i, j);
  evroute::DenseLp lp;
  const int n = static_cast<int>(acts.size());
  lp.c.assign(n, 0.0);
  for (int k = 0; k < n; ++k) lp.c[k] = spec.net.costs[acts[k].first][acts[k].second];
  lp.a_eq.assign(I, std::vector<double>(n, 0.0));
  lp.b_eq = spec.net.arrival_rates;
  lp.a_ub.assign(J, std::vector<double>(n, 0.0));
  lp.b_ub.assign(J, 0.0);
  for (int j = 0; j < J; ++j) lp.b_ub[j] = spec.net.pool_sizes[j];
  for (int k = 0; k < n; ++k) {
    const auto [i, j] = acts[k];
    lp.a_eq[i][k] = 1.0;
    lp.a_ub[j][k] = 1.0 / spec.net.service_rates[i][j];
  }
  if (order != nullptr) *order = acts;
  return lp;
}

/* Random bipartite forest over up to `max_i` EV types and `max_j` stations,
 * returned as a BasicActivityGraph plus a compatible service-rate matrix.
 * Built by sequentially joining vertices from distinct components, which can
 * never close a cycle. */
struct RandomForest {
  evroute::BasicActivityGraph graph;
  evroute::Matrix mu;
};

inline RandomForest random_forest(std::mt19937& g, int max_i = 4, int max_j = 4) {
  const int I = uniform_int(g, 1, max_i);
  const int J = uniform_int(g, 1, max_j);
  const int V = I + J;
  std::vector<int> parent(V);
  for (int v = 0; v < V; ++v) parent[v] = v;
  const std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };

  RandomForest out;
  out.graph.ev_types = I;
  out.graph.charger_types = J;
  out.mu.assign(I, std::vector<double>(J, 0.0));
  std::vector<std::pair<int, int>> all_pairs;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) all_pairs.emplace_back(i, j);
  std::shuffle(all_pairs.begin(), all_pairs.end(), g);
  const int target_edges = uniform_int(g, 1, std::min(static_cast<int>(all_pairs.size()), V - 1));
  for (const auto& [i, j] : all_pairs) {
    if (static_cast<int>(out.graph.edges.size()) >= target_edges) break;
    const int a = find(i), b = find(I + j);
    if (a == b) continue;  // would close a cycle
    parent[a] = b;
    out.graph.edges.emplace_back(i, j);
    out.mu[i][j] = uniform(g, 0.5, 3.0);
  }
  std::sort(out.graph.edges.begin(), out.graph.edges.end());

  out.graph.stations_of.assign(I, {});
  out.graph.types_of.assign(J, {});
  for (const auto& [i, j] : out.graph.edges) {
    out.graph.stations_of[i].push_back(j);
    out.graph.types_of[j].push_back(i);
  }
  out.graph.component.assign(V, 0);
  std::vector<int> label(V, -1);
  int next = 0;
  for (int v = 0; v < V; ++v) {
    const int root = find(v);
    if (label[root] < 0) label[root] = next++;
    out.graph.component[v] = label[root];
  }
  out.graph.n_components = next;
  out.graph.is_forest = true;
  return out;
}

}  // namespace test_instances
