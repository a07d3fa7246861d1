#include "evroute/policies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evroute {

namespace {

constexpr double kTimeSlack = 1e-9;  // tolerated backwards jitter

void check_forward(double now, double last, const char* who) {
  if (now < last - kTimeSlack) {
    std::ostringstream os;
    os.precision(17);
    os << who << ": decay to " << now << " precedes last update " << last;
    throw PolicyError(PolicyError::Code::time_reversal, os.str());
  }
}

}  // namespace

GpdState GpdState::make(const ValidatedSpec& spec, double beta, const std::vector<double>& initial_q) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const int J = spec.charger_types();
  GpdState s;
  s.beta = beta;
  if (initial_q.empty()) {
    s.q.assign(J, 0.0);
  } else {
    if (static_cast<int>(initial_q.size()) != J)
      throw std::invalid_argument("initial virtual queue vector has wrong length");
    for (double v : initial_q)
      if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("initial virtual queues must be >= 0");
    s.q = initial_q;
  }
  s.q_integral.assign(J, 0.0);
  s.last_update.assign(J, 0.0);
  s.decay_rate = spec.net.pool_sizes;
  return s;
}

void GpdState::decay_to(double now) {
  for (size_t j = 0; j < q.size(); ++j) {
    check_forward(now, last_update[j], "gpd");
    const double dt = std::max(0.0, now - last_update[j]);
    if (dt > 0.0) {
      // Exact area under Q during [last, now]: linear descent, floored at 0.
      const double n = static_cast<double>(decay_rate[j]);
      const double tau = std::min(dt, q[j] / n);
      q_integral[j] += q[j] * tau - 0.5 * n * tau * tau;
      q[j] = std::max(0.0, q[j] - n * dt);
    }
    last_update[j] = now;
  }
}

double GpdState::value_at(int j, double t) const {
  check_forward(t, last_update[j], "gpd");
  const double dt = std::max(0.0, t - last_update[j]);
  return std::max(0.0, q[j] - decay_rate[j] * dt);
}

double GpdState::integral_at(int j, double t) const {
  check_forward(t, last_update[j], "gpd");
  const double dt = std::max(0.0, t - last_update[j]);
  const double n = static_cast<double>(decay_rate[j]);
  const double tau = std::min(dt, q[j] / n);
  return q_integral[j] + q[j] * tau - 0.5 * n * tau * tau;
}

RoutingDecision GpdState::route(int ev_type, const ValidatedSpec& spec) {
  const std::vector<int>& candidates = spec.stations_for[ev_type];
  if (candidates.empty())
    throw PolicyError(PolicyError::Code::no_usable_station, "no usable station for EV type");
  RoutingDecision d;
  d.scores.reserve(candidates.size());
  double best = 0.0;
  for (int j : candidates) {
    const double mu = spec.net.service_rates[ev_type][j];
    const double score = spec.net.costs[ev_type][j] + beta * q[j] / mu;
    d.scores.emplace_back(j, score);
    if (d.station < 0 || score < best) {
      best = score;
      d.station = j;
    }
  }
  q[d.station] += 1.0 / spec.net.service_rates[ev_type][d.station];
  return d;
}

LbState LbState::make(const ValidatedSpec& spec, double beta, const ClusterSet& clusters,
                      ClusterDecayMode mode, const std::vector<double>& initial_q) {
  const int J = spec.charger_types();
  LbState s;
  s.gpd = GpdState::make(spec, beta, initial_q);
  s.clusters = clusters;
  s.mode = mode;
  const int L = clusters.count();
  if (static_cast<int>(clusters.weights.size()) != L)
    throw PolicyError(PolicyError::Code::bad_cluster, "one weight per cluster required");
  s.values.assign(L, {});
  s.cluster_last_update.assign(L, 0.0);
  s.memberships.assign(J, {});
  for (int l = 0; l < L; ++l) {
    const std::vector<int>& mem = s.clusters.members[l];
    if (mem.empty()) throw PolicyError(PolicyError::Code::bad_cluster, "empty cluster");
    if (!(clusters.weights[l] >= 0.0) || !std::isfinite(clusters.weights[l]))
      throw PolicyError(PolicyError::Code::bad_cluster, "cluster weight must be finite and nonnegative");
    for (size_t k = 0; k < mem.size(); ++k) {
      const int j = mem[k];
      if (j < 0 || j >= J) throw PolicyError(PolicyError::Code::bad_cluster, "cluster station out of range");
      if (k > 0 && mem[k - 1] >= j)
        throw PolicyError(PolicyError::Code::bad_cluster, "cluster stations must be ascending and distinct");
      s.memberships[j].emplace_back(l, static_cast<int>(k));
    }
    // spread the weight so that sum_j beta L_{j,l}(0) = W_l
    s.values[l].assign(mem.size(), clusters.weights[l] / (beta * static_cast<double>(mem.size())));
  }
  return s;
}

void LbState::decay_to(double now) {
  gpd.decay_to(now);
  const double beta = gpd.beta;
  for (int l = 0; l < clusters.count(); ++l) {
    check_forward(now, cluster_last_update[l], "lb-cluster");
    const double dt = std::max(0.0, now - cluster_last_update[l]);
    cluster_last_update[l] = now;
    if (dt <= 0.0) continue;
    double sum_beta = 0.0;
    double rate_beta = 0.0;
    const std::vector<int>& mem = clusters.members[l];
    for (size_t k = 0; k < mem.size(); ++k) {
      sum_beta += beta * values[l][k];
      rate_beta += beta * gpd.decay_rate[mem[k]];
    }
    const double w = clusters.weights[l];
    if (sum_beta <= w) continue;  // frozen at or below the weight line
    if (mode == ClusterDecayMode::impulse_on_trigger) {
      for (size_t k = 0; k < mem.size(); ++k) values[l][k] -= gpd.decay_rate[mem[k]];
      continue;
    }
    // Decay at rate N_j per member until the weighted sum crosses W_l.
    const double t_cross = (sum_beta - w) / rate_beta;
    const double tau = std::min(dt, t_cross);
    for (size_t k = 0; k < mem.size(); ++k) values[l][k] -= gpd.decay_rate[mem[k]] * tau;
  }
}

double LbState::cluster_sum_at(int station, double t) const {
  const double beta = gpd.beta;
  double total = 0.0;
  for (auto [l, k] : memberships[station]) {
    check_forward(t, cluster_last_update[l], "lb-cluster");
    const double dt = std::max(0.0, t - cluster_last_update[l]);
    double value = values[l][k];
    if (dt > 0.0 && mode == ClusterDecayMode::rate_while_above) {
      double sum_beta = 0.0, rate_beta = 0.0;
      const std::vector<int>& mem = clusters.members[l];
      for (size_t m = 0; m < mem.size(); ++m) {
        sum_beta += beta * values[l][m];
        rate_beta += beta * gpd.decay_rate[mem[m]];
      }
      if (sum_beta > clusters.weights[l]) {
        const double tau = std::min(dt, (sum_beta - clusters.weights[l]) / rate_beta);
        value -= gpd.decay_rate[station] * tau;
      }
    }
    total += value;
  }
  return total;
}

RoutingDecision LbState::route(int ev_type, const ValidatedSpec& spec) {
  const std::vector<int>& candidates = spec.stations_for[ev_type];
  if (candidates.empty())
    throw PolicyError(PolicyError::Code::no_usable_station, "no usable station for EV type");
  RoutingDecision d;
  d.scores.reserve(candidates.size());
  double best = 0.0;
  for (int j : candidates) {
    const double mu = spec.net.service_rates[ev_type][j];
    double cluster_part = 0.0;
    for (auto [l, k] : memberships[j]) cluster_part += values[l][k];
    const double score = spec.net.costs[ev_type][j] + gpd.beta * (gpd.q[j] + cluster_part) / mu;
    d.scores.emplace_back(j, score);
    if (d.station < 0 || score < best) {
      best = score;
      d.station = j;
    }
  }
  const double bump = 1.0 / spec.net.service_rates[ev_type][d.station];
  gpd.q[d.station] += bump;
  for (auto [l, k] : memberships[d.station]) values[l][k] += bump;
  return d;
}

RoutingDecision greedy_route(int ev_type, const ValidatedSpec& spec) {
  const std::vector<int>& candidates = spec.stations_for[ev_type];
  if (candidates.empty())
    throw PolicyError(PolicyError::Code::no_usable_station, "no usable station for EV type");
  RoutingDecision d;
  double best = 0.0;
  for (int j : candidates) {
    const double score = spec.net.costs[ev_type][j];
    d.scores.emplace_back(j, score);
    if (d.station < 0 || score < best) {
      best = score;
      d.station = j;
    }
  }
  return d;
}

RoutingDecision fcsq_route(int ev_type, const std::vector<StationSnapshot>& stations,
                           const BasicActivityGraph& basic, const ValidatedSpec& spec,
                           bool realized_estimate) {
  const std::vector<int>& basic_candidates = basic.stations_of[ev_type];
  const std::vector<int>& candidates =
      basic_candidates.empty() ? spec.stations_for[ev_type] : basic_candidates;
  if (candidates.empty())
    throw PolicyError(PolicyError::Code::no_usable_station, "no usable station for EV type");

  RoutingDecision d;
  bool any_free = false;
  for (int j : candidates)
    if (stations[j].free_chargers > 0) {
      any_free = true;
      break;
    }

  if (any_free) {
    // Most idle capacity, relative to pool size.
    double best = -1.0;
    for (int j : candidates) {
      const double frac = static_cast<double>(stations[j].free_chargers) / stations[j].pool_size;
      d.scores.emplace_back(j, -frac);  // lower score = better, uniform with the wait branch
      if (frac > best) {
        best = frac;
        d.station = j;
      }
    }
    return d;
  }

  // All candidates saturated: smallest estimated wait for a free charger.
  double best = 0.0;
  for (int j : candidates) {
    double estimate;
    if (realized_estimate) {
      estimate = stations[j].queued_work / stations[j].pool_size;
    } else {
      double work = 0.0;
      for (int i = 0; i < spec.ev_types(); ++i) {
        const int n = stations[j].queued_by_type[i];
        if (n > 0) work += static_cast<double>(n) / spec.net.service_rates[i][j];
      }
      estimate = work / stations[j].pool_size;
    }
    d.scores.emplace_back(j, estimate);
    if (d.station < 0 || estimate < best) {
      best = estimate;
      d.station = j;
    }
  }
  return d;
}

}  // namespace evroute
