#include "evroute/network.hpp"

#include <cmath>
#include <sstream>

namespace evroute {

RenewalProcessSpec RenewalProcessSpec::exponential_rate(double rate) {
  if (!(rate > 0.0)) throw SpecError(SpecError::Code::negative_rate, "exponential rate must be positive");
  return {DistributionFamily::exponential, rate, 0.0};
}

RenewalProcessSpec RenewalProcessSpec::deterministic_mean(double mean) {
  if (!(mean > 0.0)) throw SpecError(SpecError::Code::negative_rate, "deterministic mean must be positive");
  return {DistributionFamily::deterministic, mean, 0.0};
}

RenewalProcessSpec RenewalProcessSpec::uniform_range(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo) || !(lo + hi > 0.0))
    throw SpecError(SpecError::Code::negative_rate, "uniform range must satisfy 0 <= lo < hi, positive mean");
  return {DistributionFamily::uniform, lo, hi};
}

RenewalProcessSpec RenewalProcessSpec::from_rate(DistributionFamily family, double rate) {
  if (!(rate > 0.0)) throw SpecError(SpecError::Code::negative_rate, "rate must be positive");
  switch (family) {
    case DistributionFamily::exponential: return exponential_rate(rate);
    case DistributionFamily::deterministic: return deterministic_mean(1.0 / rate);
    case DistributionFamily::uniform: return uniform_range(0.5 / rate, 1.5 / rate);
  }
  throw SpecError(SpecError::Code::negative_rate, "unknown distribution family");
}

double RenewalProcessSpec::mean() const {
  switch (family) {
    case DistributionFamily::exponential: return 1.0 / a;
    case DistributionFamily::deterministic: return a;
    case DistributionFamily::uniform: return 0.5 * (a + b);
  }
  return 0.0;
}

double RenewalProcessSpec::draw(RandomStream& rng) const {
  switch (family) {
    case DistributionFamily::exponential: return rng.exponential(a);
    case DistributionFamily::deterministic: return a;
    case DistributionFamily::uniform: return rng.uniform(a, b);
  }
  return 0.0;
}

ValidatedSpec validate_spec(const NetworkSpec& net) {
  const int I = net.ev_types, J = net.charger_types;
  if (I < 1 || J < 1)
    throw SpecError(SpecError::Code::empty_type_set, "need at least one EV type and one charger type");

  auto require_shape = [&](size_t rows, size_t want, const char* what) {
    if (rows != want) {
      std::ostringstream os;
      os << what << " has " << rows << " entries, expected " << want;
      throw SpecError(SpecError::Code::empty_type_set, os.str());
    }
  };
  require_shape(net.arrival_rates.size(), static_cast<size_t>(I), "lambda");
  require_shape(net.service_rates.size(), static_cast<size_t>(I), "mu (rows)");
  require_shape(net.costs.size(), static_cast<size_t>(I), "cost (rows)");
  require_shape(net.pool_sizes.size(), static_cast<size_t>(J), "N");
  for (int i = 0; i < I; ++i) {
    require_shape(net.service_rates[i].size(), static_cast<size_t>(J), "mu (row width)");
    require_shape(net.costs[i].size(), static_cast<size_t>(J), "cost (row width)");
  }

  for (int i = 0; i < I; ++i) {
    if (net.arrival_rates[i] < 0.0 || !std::isfinite(net.arrival_rates[i]))
      throw SpecError(SpecError::Code::negative_rate, "lambda entries must be finite and nonnegative");
    for (int j = 0; j < J; ++j) {
      const double mu = net.service_rates[i][j];
      if (mu < 0.0 || !std::isfinite(mu))
        throw SpecError(SpecError::Code::negative_rate, "mu entries must be finite and nonnegative");
      const double c = net.costs[i][j];
      if (c < 0.0 || std::isnan(c))
        throw SpecError(SpecError::Code::negative_rate, "cost entries must be nonnegative (inf = unreachable)");
    }
  }
  for (int j = 0; j < J; ++j)
    if (net.pool_sizes[j] < 1)
      throw SpecError(SpecError::Code::non_positive_pool, "pool sizes must be at least 1");

  ValidatedSpec v;
  v.net = net;
  v.usable.assign(I, std::vector<char>(J, 0));
  v.stations_for.assign(I, {});
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) {
      const bool ok = net.service_rates[i][j] > 0.0 && !is_unreachable(net.costs[i][j]);
      v.usable[i][j] = ok ? 1 : 0;
      if (ok) v.stations_for[i].push_back(j);
    }
    if (net.arrival_rates[i] > 0.0 && v.stations_for[i].empty()) {
      std::ostringstream os;
      os << "EV type " << (i + 1) << " has positive demand but no usable station";
      throw SpecError(SpecError::Code::orphan_ev_type, os.str());
    }
  }
  return v;
}

double draw_service_time(int ev_type, int station, const ValidatedSpec& spec, RandomStream& rng) {
  const double mu = spec.net.service_rates[ev_type][station];
  if (!(mu > 0.0))
    throw SpecError(SpecError::Code::incompatible_activity, "service draw for an incompatible activity");
  return RenewalProcessSpec::from_rate(spec.net.service_family, mu).draw(rng);
}

std::string to_text(const NetworkSpec& net) {
  std::ostringstream os;
  os.precision(17);
  os << "ev_types " << net.ev_types << "\n";
  os << "charger_types " << net.charger_types << "\n";
  os << "lambda";
  for (double x : net.arrival_rates) os << ' ' << x;
  os << "\nmu";
  for (const auto& row : net.service_rates)
    for (double x : row) os << ' ' << x;
  os << "\ncost";
  for (const auto& row : net.costs)
    for (double x : row) os << ' ' << (is_unreachable(x) ? std::string("inf") : [&] {
      std::ostringstream t;
      t.precision(17);
      t << x;
      return t.str();
    }());
  os << "\nN";
  for (int n : net.pool_sizes) os << ' ' << n;
  os << "\n";
  return os.str();
}

}  // namespace evroute
