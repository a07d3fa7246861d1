#pragma once

#include <utility>
#include <vector>

#include "evroute/network.hpp"
#include "evroute/planner.hpp"

namespace evroute {

/* Outcome of one routing decision: the chosen station plus the scores that
 * were compared (candidate stations only), for audit logs. */
struct RoutingDecision {
  int station = -1;
  std::vector<std::pair<int, double>> scores;  // (station, score), candidates only
};

/* Physical state of one charger pool as visible to a routing policy. */
struct StationSnapshot {
  int pool_size = 0;
  int free_chargers = 0;
  std::vector<int> queued_by_type;  // waiting (not in service), per EV type
  double queued_work = 0.0;         // sum of drawn future service times (realized mode)
};

/* Virtual-queue price tracker. Q_j decays deterministically at rate N_j per
 * unit time, floored at zero; a routing decision adds 1/mu_ij to the chosen
 * station. Decay is applied lazily and exactly per station, and the exact
 * time integral of each Q_j is accumulated alongside. */
struct GpdState {
  double beta = 0.01;
  std::vector<double> q;            // per station
  std::vector<double> q_integral;   // exact integral of Q_j dt since t=0
  std::vector<double> last_update;  // per station
  std::vector<int> decay_rate;      // N_j

  static GpdState make(const ValidatedSpec& spec, double beta,
                       const std::vector<double>& initial_q = {});

  /* Advance every station to `now`. Throws PolicyError::time_reversal when
   * now precedes a station's last update. */
  void decay_to(double now);

  /* Q_j at time t >= last_update[j] without mutating state. */
  double value_at(int j, double t) const;
  double integral_at(int j, double t) const;

  /* Score c_i(j) + beta Q_j / mu_ij over usable stations, argmin with ties
   * to the lowest station index; bumps the winner by 1/mu_ij. State must
   * already be decayed to the decision time. */
  RoutingDecision route(int ev_type, const ValidatedSpec& spec);
};

enum class ClusterDecayMode {
  rate_while_above,   // default: rate N_j while sum_j beta L_{j,l} > W_l, frozen at crossing
  impulse_on_trigger  // experimental: subtract N_j once per decay evaluation above W_l
};

/* GPD extended with per-cluster virtual queues L_{j,l}. Scores add the sum
 * of a station's cluster queues; a decision bumps the station's Q and every
 * containing cluster's L entry by 1/mu_ij. Initialization spreads each
 * cluster's weight uniformly: L_{j,l}(0) = W_l / (beta |l|), so
 * sum_j beta L_{j,l}(0) = W_l. */
struct LbState {
  GpdState gpd;
  ClusterSet clusters;
  ClusterDecayMode mode = ClusterDecayMode::rate_while_above;
  std::vector<std::vector<double>> values;       // per cluster, per member
  std::vector<double> cluster_last_update;       // per cluster
  std::vector<std::vector<std::pair<int, int>>> memberships;  // per station: (cluster, member idx)

  static LbState make(const ValidatedSpec& spec, double beta, const ClusterSet& clusters,
                      ClusterDecayMode mode = ClusterDecayMode::rate_while_above,
                      const std::vector<double>& initial_q = {});

  void decay_to(double now);
  double cluster_sum_at(int station, double t) const;  // sum over containing clusters of L
  RoutingDecision route(int ev_type, const ValidatedSpec& spec);
};

/* Cost-only baseline: argmin over usable stations of c_i(j). Throws
 * PolicyError::no_usable_station when the candidate set is empty. */
RoutingDecision greedy_route(int ev_type, const ValidatedSpec& spec);

/* Fewest expected Customers, Shortest Queue:
 * candidates = stations of the type's basic activities (all usable stations
 * when the type has none). If any candidate has a free charger, take the
 * largest free fraction free_j / N_j; otherwise the smallest wait estimate,
 * (sum_i n_ij / mu_ij) / N_j by default, queued_work_j / N_j in realized
 * mode. Ties break to the lowest station index. */
RoutingDecision fcsq_route(int ev_type, const std::vector<StationSnapshot>& stations,
                           const BasicActivityGraph& basic, const ValidatedSpec& spec,
                           bool realized_estimate = false);

}  // namespace evroute
