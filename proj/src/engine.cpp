#include "evroute/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "evroute/rng.hpp"

namespace evroute {

std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::gpd: return "gpd";
    case PolicyKind::lb: return "lb";
    case PolicyKind::fcsq: return "fcsq";
    case PolicyKind::greedy: return "greedy";
  }
  return "?";
}

std::optional<PolicyKind> policy_from_name(const std::string& name) {
  if (name == "gpd") return PolicyKind::gpd;
  if (name == "lb") return PolicyKind::lb;
  if (name == "fcsq") return PolicyKind::fcsq;
  if (name == "greedy") return PolicyKind::greedy;
  return std::nullopt;
}

namespace {

struct Event {
  double t = 0.0;
  int kind = 0;  // 0 = completion, 1 = arrival; completions first on ties
  long seq = 0;
  int a = 0;   // station (completion) or EV type (arrival)
  long b = 0;  // request id (completion)
};

struct EventAfter {
  bool operator()(const Event& x, const Event& y) const {
    if (x.t != y.t) return x.t > y.t;
    if (x.kind != y.kind) return x.kind > y.kind;
    return x.seq > y.seq;
  }
};

/* Policy adapter: decays internal clocks, routes, and exposes the virtual
 * queues for grid sampling (zeros for stateless policies). */
class Router {
 public:
  virtual ~Router() = default;
  virtual void advance_to(double) {}
  virtual RoutingDecision route(int ev_type, const std::vector<StationSnapshot>& stations) = 0;
  virtual void sample(double /*t*/, std::vector<double>& q, std::vector<double>& integral) const {
    std::fill(q.begin(), q.end(), 0.0);
    std::fill(integral.begin(), integral.end(), 0.0);
  }
};

class GpdRouter : public Router {
 public:
  GpdRouter(const ValidatedSpec& spec, double beta, const std::vector<double>& q0)
      : spec_(spec), state_(GpdState::make(spec, beta, q0)) {}
  void advance_to(double t) override { state_.decay_to(t); }
  RoutingDecision route(int ev_type, const std::vector<StationSnapshot>&) override {
    return state_.route(ev_type, spec_);
  }
  void sample(double t, std::vector<double>& q, std::vector<double>& integral) const override {
    for (size_t j = 0; j < q.size(); ++j) {
      q[j] = state_.value_at(static_cast<int>(j), t);
      integral[j] = state_.integral_at(static_cast<int>(j), t);
    }
  }

 private:
  const ValidatedSpec& spec_;
  GpdState state_;
};

class LbRouter : public Router {
 public:
  LbRouter(const ValidatedSpec& spec, double beta, const ClusterSet& clusters,
           ClusterDecayMode mode, const std::vector<double>& q0)
      : spec_(spec), state_(LbState::make(spec, beta, clusters, mode, q0)) {}
  void advance_to(double t) override { state_.decay_to(t); }
  RoutingDecision route(int ev_type, const std::vector<StationSnapshot>&) override {
    return state_.route(ev_type, spec_);
  }
  void sample(double t, std::vector<double>& q, std::vector<double>& integral) const override {
    for (size_t j = 0; j < q.size(); ++j) {
      q[j] = state_.gpd.value_at(static_cast<int>(j), t);
      integral[j] = state_.gpd.integral_at(static_cast<int>(j), t);
    }
  }

 private:
  const ValidatedSpec& spec_;
  LbState state_;
};

class FcsqRouter : public Router {
 public:
  FcsqRouter(const ValidatedSpec& spec, const BasicActivityGraph& basic, bool realized)
      : spec_(spec), basic_(basic), realized_(realized) {}
  RoutingDecision route(int ev_type, const std::vector<StationSnapshot>& stations) override {
    return fcsq_route(ev_type, stations, basic_, spec_, realized_);
  }

 private:
  const ValidatedSpec& spec_;
  const BasicActivityGraph& basic_;
  bool realized_;
};

class GreedyRouter : public Router {
 public:
  explicit GreedyRouter(const ValidatedSpec& spec) : spec_(spec) {}
  RoutingDecision route(int ev_type, const std::vector<StationSnapshot>&) override {
    return greedy_route(ev_type, spec_);
  }

 private:
  const ValidatedSpec& spec_;
};

struct StationState {
  int busy = 0;
  std::deque<long> waiting;          // request ids, FIFO
  std::vector<int> queued_by_type;   // per EV type
  double queued_work = 0.0;          // realized mode only
  double last_t = 0.0;
  double queue_len_integral = 0.0;

  void settle_to(double t) {
    queue_len_integral += static_cast<double>(waiting.size()) * (t - last_t);
    last_t = t;
  }
};

}  // namespace

SimTrace run_simulation(const ValidatedSpec& spec, const SimConfig& cfg, SimSeeds seeds,
                        const BasicActivityGraph* basic) {
  const int I = spec.ev_types();
  const int J = spec.charger_types();

  const bool by_count = cfg.horizon_arrivals > 0;
  const bool by_time = cfg.horizon_time > 0.0;
  if (by_count && by_time)
    throw std::invalid_argument("set only one of horizon_arrivals and horizon_time");
  if (cfg.horizon_arrivals < 0 || cfg.horizon_time < 0.0 || !std::isfinite(cfg.horizon_time))
    throw std::invalid_argument("horizons must be nonnegative and finite");
  if (!(cfg.grid_dt > 0.0)) throw std::invalid_argument("grid_dt must be positive");
  if (cfg.rate_switch) {
    const RateSwitch& sw = *cfg.rate_switch;
    if (sw.at_arrival < 0) throw std::invalid_argument("rate switch index must be >= 0");
    if (static_cast<int>(sw.new_rates.size()) != I)
      throw std::invalid_argument("rate switch vector has wrong length");
    for (double v : sw.new_rates)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("rate switch rates must be nonnegative and finite");
  }
  if (cfg.policy == PolicyKind::fcsq) {
    if (basic == nullptr)
      throw std::invalid_argument("fcsq needs a basic-activity graph");
    if (basic->ev_types != I || basic->charger_types != J)
      throw std::invalid_argument("basic-activity graph shape does not match the network");
  }

  std::unique_ptr<Router> router;
  switch (cfg.policy) {
    case PolicyKind::gpd:
      router = std::make_unique<GpdRouter>(spec, cfg.beta, cfg.initial_virtual_queues);
      break;
    case PolicyKind::lb:
      // An empty cluster set leaves no cluster queues: lb then coincides with gpd.
      router = std::make_unique<LbRouter>(spec, cfg.beta, cfg.clusters, cfg.cluster_decay,
                                          cfg.initial_virtual_queues);
      break;
    case PolicyKind::fcsq:
      router = std::make_unique<FcsqRouter>(spec, *basic, cfg.fcsq_realized_estimate);
      break;
    case PolicyKind::greedy:
      router = std::make_unique<GreedyRouter>(spec);
      break;
  }

  // Per-type arrival streams and per-activity service streams, so routing
  // decisions never perturb another policy's draws.
  std::vector<RandomStream> arrival_streams;
  arrival_streams.reserve(I);
  for (int i = 0; i < I; ++i)
    arrival_streams.emplace_back(seeds.base, RandomStream::Kind::arrival, i, 0);
  std::vector<std::vector<RandomStream>> service_streams;
  service_streams.reserve(I);
  for (int i = 0; i < I; ++i) {
    std::vector<RandomStream> row;
    row.reserve(J);
    for (int j = 0; j < J; ++j) row.emplace_back(seeds.base, RandomStream::Kind::service, i, j);
    service_streams.push_back(std::move(row));
  }

  std::vector<double> current_rates = spec.net.arrival_rates;
  long routed_count = 0;
  if (cfg.rate_switch && cfg.rate_switch->at_arrival == 0)
    current_rates = cfg.rate_switch->new_rates;

  std::priority_queue<Event, std::vector<Event>, EventAfter> heap;
  long seq = 0;

  auto schedule_arrival = [&](int i, double from) {
    const double rate = current_rates[i];
    if (!(rate > 0.0)) return;
    const RenewalProcessSpec proc = RenewalProcessSpec::from_rate(spec.net.arrival_family, rate);
    const double gap = proc.draw(arrival_streams[i]);
    heap.push(Event{from + gap, 1, seq++, i, 0});
  };

  const bool empty_run = !by_count && !by_time;
  if (!empty_run)
    for (int i = 0; i < I; ++i) schedule_arrival(i, 0.0);

  SimTrace trace;
  trace.ev_types = I;
  trace.charger_types = J;
  trace.queue_len_integral.assign(J, 0.0);
  trace.routed_final.assign(static_cast<size_t>(I) * J, 0);

  std::vector<StationState> stations(J);
  for (int j = 0; j < J; ++j) stations[j].queued_by_type.assign(I, 0);

  std::vector<long>& routed = trace.routed_final;
  double last_arrival_t = 0.0;
  bool arrivals_done = empty_run;
  double end_time = 0.0;

  long next_grid_index = 0;
  std::vector<double> sample_q(J), sample_qi(J);
  auto grid_limit = [&]() -> double {
    if (by_time) return cfg.horizon_time;
    if (arrivals_done) return by_count ? last_arrival_t : 0.0;
    return std::numeric_limits<double>::infinity();
  };
  auto sample_grid_up_to = [&](double t) {
    const double limit = std::min(t, grid_limit());
    while (true) {
      const double tg = cfg.grid_dt * static_cast<double>(next_grid_index);
      if (tg > limit + 1e-12) break;
      router->sample(tg, sample_q, sample_qi);
      GridSample s;
      s.t = tg;
      s.virtual_q = sample_q;
      s.virtual_q_integral = sample_qi;
      s.routed = routed;
      trace.grid.push_back(std::move(s));
      ++next_grid_index;
    }
  };

  auto push_occupancy = [&](double t, int j) {
    trace.occupancy.push_back(
        OccupancyRow{t, j, stations[j].busy, static_cast<int>(stations[j].waiting.size())});
  };

  auto draw_service = [&](int i, int j) {
    return draw_service_time(i, j, spec, service_streams[i][j]);
  };

  auto start_service = [&](long req_id, int j, double t, double duration) {
    RequestRecord& rec = trace.requests[req_id];
    rec.t_start = t;
    rec.service = duration;
    rec.t_complete = t + duration;
    stations[j].busy += 1;
    heap.push(Event{t + duration, 0, seq++, j, req_id});
  };

  while (!heap.empty()) {
    const Event ev = heap.top();
    heap.pop();
    sample_grid_up_to(ev.t);

    if (ev.kind == 1) {
      const int i = ev.a;
      if (by_time && ev.t > cfg.horizon_time) continue;     // past the window: discard, stream ends
      if (by_count && routed_count >= cfg.horizon_arrivals) continue;

      end_time = std::max(end_time, ev.t);
      router->advance_to(ev.t);

      std::vector<StationSnapshot> snaps(J);
      for (int j = 0; j < J; ++j) {
        snaps[j].pool_size = spec.net.pool_sizes[j];
        snaps[j].free_chargers = spec.net.pool_sizes[j] - stations[j].busy;
        snaps[j].queued_by_type = stations[j].queued_by_type;
        snaps[j].queued_work = stations[j].queued_work;
      }
      const RoutingDecision decision = router->route(i, snaps);
      const int j = decision.station;
      const long req_id = static_cast<long>(trace.requests.size());

      RequestRecord rec;
      rec.id = req_id;
      rec.ev_type = i;
      rec.station = j;
      rec.t_arrive = ev.t;
      trace.requests.push_back(rec);
      routed[static_cast<size_t>(i) * J + j] += 1;
      if (cfg.audit) trace.audits.push_back(DecisionAudit{req_id, j, decision.scores});

      stations[j].settle_to(ev.t);
      if (stations[j].busy < spec.net.pool_sizes[j]) {
        start_service(req_id, j, ev.t, draw_service(i, j));
      } else {
        if (cfg.policy == PolicyKind::fcsq && cfg.fcsq_realized_estimate) {
          const double d = draw_service(i, j);
          trace.requests[req_id].service = d;
          stations[j].queued_work += d;
        }
        stations[j].waiting.push_back(req_id);
        stations[j].queued_by_type[i] += 1;
      }
      push_occupancy(ev.t, j);

      routed_count += 1;
      last_arrival_t = ev.t;
      if (cfg.rate_switch && routed_count == cfg.rate_switch->at_arrival)
        current_rates = cfg.rate_switch->new_rates;
      if (!(by_count && routed_count >= cfg.horizon_arrivals)) {
        schedule_arrival(i, ev.t);
      } else {
        arrivals_done = true;
      }
    } else {
      const int j = ev.a;
      end_time = std::max(end_time, ev.t);
      stations[j].settle_to(ev.t);
      stations[j].busy -= 1;
      if (!stations[j].waiting.empty()) {
        const long next_id = stations[j].waiting.front();
        stations[j].waiting.pop_front();
        RequestRecord& next = trace.requests[next_id];
        stations[j].queued_by_type[next.ev_type] -= 1;
        double duration;
        if (cfg.policy == PolicyKind::fcsq && cfg.fcsq_realized_estimate) {
          duration = next.service;  // drawn at assignment
          stations[j].queued_work -= duration;
        } else {
          duration = draw_service(next.ev_type, j);
        }
        start_service(next_id, j, ev.t, duration);
      }
      push_occupancy(ev.t, j);
    }
  }

  if (by_time) {
    trace.arrival_window_end = cfg.horizon_time;
    arrivals_done = true;
  } else if (by_count) {
    trace.arrival_window_end = last_arrival_t;
  } else {
    trace.arrival_window_end = 0.0;
  }
  sample_grid_up_to(trace.arrival_window_end);  // flush trailing grid points

  trace.total_arrivals = routed_count;
  trace.end_time = std::max(end_time, trace.arrival_window_end);
  for (int j = 0; j < J; ++j) {
    stations[j].settle_to(trace.end_time);
    trace.queue_len_integral[j] = stations[j].queue_len_integral;
  }
  return trace;
}

Summary summarize(const SimTrace& trace) {
  const int J = trace.charger_types;
  Summary s;
  s.count = static_cast<long>(trace.requests.size());
  s.stations.assign(J, StationSummary{});

  long zero = 0;
  double total_wait = 0.0;
  for (const RequestRecord& r : trace.requests) {
    const double w = r.wait();
    s.max_wait = std::max(s.max_wait, w);
    total_wait += w;
    if (w == 0.0) ++zero;
    StationSummary& st = s.stations[r.station];
    st.count += 1;
    st.max_wait = std::max(st.max_wait, w);
    st.mean_wait += w;
    if (w == 0.0) st.zero_wait_fraction += 1.0;
  }
  if (s.count > 0) {
    s.mean_wait = total_wait / static_cast<double>(s.count);
    s.zero_wait_fraction = static_cast<double>(zero) / static_cast<double>(s.count);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < J; ++j) {
    StationSummary& st = s.stations[j];
    if (st.count > 0) {
      st.mean_wait /= static_cast<double>(st.count);
      st.zero_wait_fraction /= static_cast<double>(st.count);
      lo = std::min(lo, st.mean_wait);
      hi = std::max(hi, st.mean_wait);
    }
    if (trace.end_time > 0.0)
      st.time_avg_queue_len = trace.queue_len_integral[j] / trace.end_time;
  }
  s.delay_inequality = (hi >= lo) ? hi - lo : 0.0;

  s.routing_rates.assign(trace.ev_types, std::vector<double>(J, 0.0));
  if (trace.arrival_window_end > 0.0)
    for (int i = 0; i < trace.ev_types; ++i)
      for (int j = 0; j < J; ++j)
        s.routing_rates[i][j] =
            static_cast<double>(trace.routed(i, j)) / trace.arrival_window_end;
  return s;
}

namespace {

std::ostream& tsv_stream(std::ostringstream& os) {
  os.precision(17);
  return os;
}

}  // namespace

std::string requests_tsv(const SimTrace& trace) {
  std::ostringstream os;
  tsv_stream(os) << "id\tev_type\tstation\tt_arrive\tt_start\tt_complete\tservice\twait\n";
  for (const RequestRecord& r : trace.requests)
    os << r.id << '\t' << (r.ev_type + 1) << '\t' << (r.station + 1) << '\t' << r.t_arrive << '\t'
       << r.t_start << '\t' << r.t_complete << '\t' << r.service << '\t' << r.wait() << '\n';
  return os.str();
}

std::string occupancy_tsv(const SimTrace& trace) {
  std::ostringstream os;
  tsv_stream(os) << "t\tstation\tbusy\tqueue_len\n";
  for (const OccupancyRow& r : trace.occupancy)
    os << r.t << '\t' << (r.station + 1) << '\t' << r.busy << '\t' << r.queue_len << '\n';
  return os.str();
}

std::string grid_tsv(const SimTrace& trace) {
  std::ostringstream os;
  tsv_stream(os) << "t";
  for (int j = 0; j < trace.charger_types; ++j) os << "\tq" << (j + 1);
  for (int j = 0; j < trace.charger_types; ++j) os << "\tq_integral" << (j + 1);
  for (int i = 0; i < trace.ev_types; ++i)
    for (int j = 0; j < trace.charger_types; ++j) os << "\trouted_" << (i + 1) << '_' << (j + 1);
  os << '\n';
  for (const GridSample& s : trace.grid) {
    os << s.t;
    for (double v : s.virtual_q) os << '\t' << v;
    for (double v : s.virtual_q_integral) os << '\t' << v;
    for (long v : s.routed) os << '\t' << v;
    os << '\n';
  }
  return os.str();
}

std::string audits_tsv(const SimTrace& trace) {
  std::ostringstream os;
  tsv_stream(os) << "request\tchosen\tstation\tscore\n";
  for (const DecisionAudit& a : trace.audits)
    for (const auto& [j, score] : a.scores)
      os << a.request << '\t' << (a.chosen + 1) << '\t' << (j + 1) << '\t' << score << '\n';
  return os.str();
}

std::string to_text(const Summary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "requests: " << s.count << '\n';
  os << "max_wait: " << s.max_wait << '\n';
  os << "mean_wait: " << s.mean_wait << '\n';
  os << "zero_wait_fraction: " << s.zero_wait_fraction << '\n';
  os << "delay_inequality: " << s.delay_inequality << '\n';
  for (size_t j = 0; j < s.stations.size(); ++j) {
    const StationSummary& st = s.stations[j];
    os << "station " << (j + 1) << ": count=" << st.count << " max_wait=" << st.max_wait
       << " mean_wait=" << st.mean_wait << " zero_wait_fraction=" << st.zero_wait_fraction
       << " time_avg_queue_len=" << st.time_avg_queue_len << '\n';
  }
  for (size_t i = 0; i < s.routing_rates.size(); ++i)
    for (size_t j = 0; j < s.routing_rates[i].size(); ++j)
      os << "rate " << (i + 1) << ' ' << (j + 1) << ": " << s.routing_rates[i][j] << '\n';
  return os.str();
}

}  // namespace evroute
