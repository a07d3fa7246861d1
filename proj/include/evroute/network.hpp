#pragma once

#include <limits>
#include <string>
#include <vector>

#include "evroute/errors.hpp"
#include "evroute/rng.hpp"

namespace evroute {

using Matrix = std::vector<std::vector<double>>;

/* Sentinel for an unreachable (EV type, station) pair. Unreachable entries
 * are filtered out of every candidate set before scores are computed;
 * arithmetic on the sentinel never feeds an argmin. */
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

inline bool is_unreachable(double cost) { return !(cost < kUnreachable); }

enum class DistributionFamily { exponential, deterministic, uniform };

/* Interarrival / service time generator description. The family is closed
 * under the three variants below; every member has a positive mean and
 * finite variance. */
struct RenewalProcessSpec {
  DistributionFamily family = DistributionFamily::exponential;
  double a = 1.0;  // exponential: rate; deterministic: mean; uniform: lo
  double b = 0.0;  // uniform: hi

  static RenewalProcessSpec exponential_rate(double rate);
  static RenewalProcessSpec deterministic_mean(double mean);
  static RenewalProcessSpec uniform_range(double lo, double hi);
  /* Family with the mean pinned to 1/rate. The uniform variant spans
   * [0.5/rate, 1.5/rate]. */
  static RenewalProcessSpec from_rate(DistributionFamily family, double rate);

  double mean() const;
  double draw(RandomStream& rng) const;
};

inline double next_interarrival(const RenewalProcessSpec& proc, RandomStream& rng) {
  return proc.draw(rng);
}

/* Static description of the charging network: EV demand classes against
 * charger pools. mu[i][j] = 0 marks an incompatible pair; cost[i][j] =
 * kUnreachable marks a pair the router must never use. */
struct NetworkSpec {
  int ev_types = 0;
  int charger_types = 0;
  std::vector<double> arrival_rates;  // lambda_i, size I
  Matrix service_rates;               // mu_ij, I x J
  Matrix costs;                       // c_i(j), I x J, finite entries >= 0
  std::vector<int> pool_sizes;        // N_j, size J
  DistributionFamily arrival_family = DistributionFamily::exponential;
  DistributionFamily service_family = DistributionFamily::exponential;
};

/* NetworkSpec that passed validation, plus the usable-activity mask
 * (mu_ij > 0 and cost finite) and per-type station lists used by every
 * candidate enumeration. */
struct ValidatedSpec {
  NetworkSpec net;
  std::vector<std::vector<char>> usable;         // I x J
  std::vector<std::vector<int>> stations_for;    // per type: usable stations, ascending

  int ev_types() const { return net.ev_types; }
  int charger_types() const { return net.charger_types; }
  bool is_usable(int i, int j) const { return usable[i][j] != 0; }
};

/* Checks shape and sign constraints and builds the usable mask.
 * Throws SpecError: empty_type_set, orphan_ev_type (lambda_i > 0 with no
 * usable station), negative_rate, non_positive_pool. */
ValidatedSpec validate_spec(const NetworkSpec& net);

/* Service-duration draw for activity (i,j) from the given stream.
 * Throws SpecError::incompatible_activity when mu_ij = 0. */
double draw_service_time(int ev_type, int station, const ValidatedSpec& spec, RandomStream& rng);

std::string to_text(const NetworkSpec& net);

}  // namespace evroute
