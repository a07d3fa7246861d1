#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "evroute/diffusion.hpp"
#include "evroute/engine.hpp"
#include "evroute/scenario.hpp"

using namespace evroute;

namespace {

/* Single type, single station, deterministic interarrivals (rate 1) and
 * deterministic service (mean 1.5): an overloaded single server whose whole
 * trajectory can be checked by hand. */
ValidatedSpec single_server() {
  NetworkSpec net;
  net.ev_types = 1;
  net.charger_types = 1;
  net.arrival_rates = {1.0};
  net.service_rates = {{1.0 / 1.5}};
  net.costs = {{0.0}};
  net.pool_sizes = {1};
  net.arrival_family = DistributionFamily::deterministic;
  net.service_family = DistributionFamily::deterministic;
  return validate_spec(net);
}

}  // namespace

TEST_CASE("deterministic single-server run matches the hand trajectory") {
  SimConfig cfg;
  cfg.policy = PolicyKind::gpd;
  cfg.beta = 0.1;
  cfg.horizon_arrivals = 3;
  cfg.grid_dt = 1.0;
  const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});

  REQUIRE(trace.requests.size() == 3);
  // arrivals at 1, 2, 3; service 1.5 each on one charger
  CHECK(trace.requests[0].t_arrive == doctest::Approx(1.0));
  CHECK(trace.requests[0].t_start == doctest::Approx(1.0));
  CHECK(trace.requests[0].t_complete == doctest::Approx(2.5));
  CHECK(trace.requests[1].t_arrive == doctest::Approx(2.0));
  CHECK(trace.requests[1].t_start == doctest::Approx(2.5));
  CHECK(trace.requests[1].t_complete == doctest::Approx(4.0));
  CHECK(trace.requests[2].t_arrive == doctest::Approx(3.0));
  CHECK(trace.requests[2].t_start == doctest::Approx(4.0));
  CHECK(trace.requests[2].t_complete == doctest::Approx(5.5));

  CHECK(trace.total_arrivals == 3);
  CHECK(trace.arrival_window_end == doctest::Approx(3.0));
  CHECK(trace.end_time == doctest::Approx(5.5));
  // waiting spells: request 1 over [2, 2.5], request 2 over [3, 4]
  REQUIRE(trace.queue_len_integral.size() == 1);
  CHECK(trace.queue_len_integral[0] == doctest::Approx(1.5));

  const Summary s = summarize(trace);
  CHECK(s.count == 3);
  CHECK(s.max_wait == doctest::Approx(1.0));
  CHECK(s.mean_wait == doctest::Approx(0.5));
  CHECK(s.zero_wait_fraction == doctest::Approx(1.0 / 3.0));
  CHECK(s.delay_inequality == doctest::Approx(0.0));  // one station only
  CHECK(s.routing_rates[0][0] == doctest::Approx(1.0));
  CHECK(s.stations[0].time_avg_queue_len == doctest::Approx(1.5 / 5.5));
}

TEST_CASE("time horizon cuts off arrivals but drains the queues") {
  SimConfig cfg;
  cfg.horizon_time = 3.5;  // arrivals at 1, 2, 3 admitted; 4 > 3.5 dropped
  const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});
  CHECK(trace.total_arrivals == 3);
  CHECK(trace.arrival_window_end == doctest::Approx(3.5));
  CHECK(trace.end_time == doctest::Approx(5.5));  // drained past the horizon
  const Summary s = summarize(trace);
  CHECK(s.routing_rates[0][0] == doctest::Approx(3.0 / 3.5));
}

TEST_CASE("exactly one horizon must be set") {
  SimConfig both;
  both.horizon_arrivals = 5;
  both.horizon_time = 5.0;
  CHECK_THROWS_AS(run_simulation(single_server(), both, SimSeeds{1}), std::invalid_argument);

  SimConfig neither;  // both zero = explicit empty run
  const SimTrace trace = run_simulation(single_server(), neither, SimSeeds{1});
  CHECK(trace.requests.empty());
  CHECK(trace.total_arrivals == 0);
  REQUIRE(trace.grid.size() == 1);  // single sample at t = 0
  CHECK(trace.grid[0].t == 0.0);
}

TEST_CASE("fcsq runs require the basic-activity graph") {
  SimConfig cfg;
  cfg.policy = PolicyKind::fcsq;
  cfg.horizon_arrivals = 5;
  CHECK_THROWS_AS(run_simulation(single_server(), cfg, SimSeeds{1}), std::invalid_argument);
}

TEST_CASE("rate switch after a fixed number of routed arrivals") {
  SUBCASE("deterministic gaps change length at the switch") {
    SimConfig cfg;
    cfg.horizon_arrivals = 4;
    cfg.rate_switch = RateSwitch{2, {2.0}};
    const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});
    REQUIRE(trace.requests.size() == 4);
    // gaps: 1, 1 (rate 1), then 0.5, 0.5 (rate 2)
    CHECK(trace.requests[0].t_arrive == doctest::Approx(1.0));
    CHECK(trace.requests[1].t_arrive == doctest::Approx(2.0));
    CHECK(trace.requests[2].t_arrive == doctest::Approx(2.5));
    CHECK(trace.requests[3].t_arrive == doctest::Approx(3.0));
  }
  SUBCASE("switch at zero applies before the first draw") {
    SimConfig cfg;
    cfg.horizon_arrivals = 2;
    cfg.rate_switch = RateSwitch{0, {2.0}};
    const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});
    CHECK(trace.requests[0].t_arrive == doctest::Approx(0.5));
    CHECK(trace.requests[1].t_arrive == doctest::Approx(1.0));
  }
  SUBCASE("switching to the same rates is a no-op") {
    SimConfig plain;
    plain.horizon_arrivals = 50;
    SimConfig switched = plain;
    switched.rate_switch = RateSwitch{25, {1.0}};
    NetworkSpec net = single_server().net;
    net.arrival_family = DistributionFamily::exponential;
    net.service_family = DistributionFamily::exponential;
    const ValidatedSpec spec = validate_spec(net);
    const SimTrace a = run_simulation(spec, plain, SimSeeds{7});
    const SimTrace b = run_simulation(spec, switched, SimSeeds{7});
    CHECK(requests_tsv(a) == requests_tsv(b));
    CHECK(grid_tsv(a) == grid_tsv(b));
  }
  SUBCASE("malformed switches are rejected") {
    SimConfig bad;
    bad.horizon_arrivals = 5;
    bad.rate_switch = RateSwitch{2, {1.0, 2.0}};  // wrong length
    CHECK_THROWS_AS(run_simulation(single_server(), bad, SimSeeds{1}), std::invalid_argument);
    bad.rate_switch = RateSwitch{2, {-1.0}};
    CHECK_THROWS_AS(run_simulation(single_server(), bad, SimSeeds{1}), std::invalid_argument);
    bad.rate_switch = RateSwitch{-1, {1.0}};
    CHECK_THROWS_AS(run_simulation(single_server(), bad, SimSeeds{1}), std::invalid_argument);
  }
}

TEST_CASE("grid samples are taken before same-time events and carry exact integrals") {
  SimConfig cfg;
  cfg.beta = 0.1;
  cfg.horizon_arrivals = 2;
  cfg.grid_dt = 1.0;
  const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});
  // arrivals at 1 and 2; mu = 2/3 so each decision bumps Q by 1.5; N = 1.
  // grid at t in {0, 1, 2}: the sample at t is taken before the arrival at t.
  REQUIRE(trace.grid.size() == 3);
  CHECK(trace.grid[0].t == doctest::Approx(0.0));
  CHECK(trace.grid[1].t == doctest::Approx(1.0));
  CHECK(trace.grid[2].t == doctest::Approx(2.0));
  CHECK(trace.grid[0].virtual_q[0] == doctest::Approx(0.0));
  CHECK(trace.grid[1].virtual_q[0] == doctest::Approx(0.0));   // pre-arrival
  CHECK(trace.grid[2].virtual_q[0] == doctest::Approx(0.5));   // 1.5 decayed by 1 over [1,2]
  CHECK(trace.grid[2].virtual_q_integral[0] == doctest::Approx(1.0));  // triangle+strip: 1.5->0.5
  CHECK(trace.grid[1].routed[0] == 0);
  CHECK(trace.grid[2].routed[0] == 1);
}

TEST_CASE("audit mode logs one scored decision per request") {
  SimConfig cfg;
  cfg.horizon_arrivals = 10;
  cfg.audit = true;
  const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{3});
  REQUIRE(trace.audits.size() == trace.requests.size());
  for (size_t k = 0; k < trace.audits.size(); ++k) {
    CHECK(trace.audits[k].request == trace.requests[k].id);
    CHECK(trace.audits[k].chosen == trace.requests[k].station);
    CHECK_FALSE(trace.audits[k].scores.empty());
  }
  SimConfig quiet = cfg;
  quiet.audit = false;
  CHECK(run_simulation(single_server(), quiet, SimSeeds{3}).audits.empty());
}

TEST_CASE("occupancy rows respect pool sizes and work conservation") {
  const Scenario sc = load_preset("toy-s6");
  SimConfig cfg = sc.config;
  cfg.horizon_arrivals = 400;
  const SimTrace trace = run_simulation(sc.spec, cfg, SimSeeds{11});
  REQUIRE_FALSE(trace.occupancy.empty());
  for (const OccupancyRow& row : trace.occupancy) {
    CHECK(row.busy >= 0);
    CHECK(row.busy <= sc.spec.net.pool_sizes[row.station]);
    CHECK(row.queue_len >= 0);
    if (row.queue_len > 0) CHECK(row.busy == sc.spec.net.pool_sizes[row.station]);
  }
  for (const RequestRecord& r : trace.requests) {
    CHECK(r.t_start >= r.t_arrive - 1e-12);
    CHECK(r.t_complete == doctest::Approx(r.t_start + r.service).epsilon(1e-12));
    CHECK(r.service > 0.0);
  }
}

TEST_CASE("routing rates in the summary add up to per-type arrival counts") {
  const Scenario sc = load_preset("toy-s6");
  SimConfig cfg = sc.config;
  cfg.horizon_arrivals = 300;
  cfg.rate_switch.reset();
  const SimTrace trace = run_simulation(sc.spec, cfg, SimSeeds{5});
  const Summary s = summarize(trace);
  std::vector<long> per_type(sc.spec.ev_types(), 0);
  for (const RequestRecord& r : trace.requests) ++per_type[r.ev_type];
  for (int i = 0; i < sc.spec.ev_types(); ++i) {
    double total = 0.0;
    for (int j = 0; j < sc.spec.charger_types(); ++j) total += s.routing_rates[i][j];
    CHECK(total * trace.arrival_window_end == doctest::Approx(per_type[i]).epsilon(1e-9));
  }
  long routed_total = 0;
  for (int i = 0; i < sc.spec.ev_types(); ++i)
    for (int j = 0; j < sc.spec.charger_types(); ++j) routed_total += trace.routed(i, j);
  CHECK(routed_total == trace.total_arrivals);
}

TEST_CASE("zero-cost networks route identically whatever the price scale") {
  // all usable costs are zero, so every score is beta Q / mu and the argmin
  // never depends on beta > 0: runs with different beta agree decision for
  // decision.
  const Scenario sc = load_preset("toy-s6");
  SimConfig a = sc.config;
  a.horizon_arrivals = 500;
  a.rate_switch.reset();
  SimConfig b = a;
  b.beta = 0.7;
  const SimTrace ta = run_simulation(sc.spec, a, SimSeeds{21});
  const SimTrace tb = run_simulation(sc.spec, b, SimSeeds{21});
  CHECK(requests_tsv(ta) == requests_tsv(tb));
}

TEST_CASE("virtual queues stay flat over long horizons inside the region") {
  const Scenario sc = load_preset("example-b");
  SimConfig cfg = sc.config;
  cfg.beta = 0.1;
  cfg.horizon_time = 10000.0;
  cfg.grid_dt = 10.0;
  const SimTrace trace = run_simulation(sc.spec, cfg, SimSeeds{2});
  // fit beta * Q_0 against t over the second half; a stable virtual queue has
  // negligible drift compared with its mean level
  std::vector<double> t, y;
  double mean = 0.0;
  for (size_t k = trace.grid.size() / 2; k < trace.grid.size(); ++k) {
    if (trace.grid[k].t > trace.arrival_window_end) break;
    t.push_back(trace.grid[k].t);
    y.push_back(cfg.beta * trace.grid[k].virtual_q[0]);
    mean += y.back();
  }
  REQUIRE(t.size() >= 100);
  mean /= static_cast<double>(t.size());
  const LinearFit fit = linear_fit(t, y);
  CHECK(mean > 0.0);
  CHECK(std::abs(fit.slope) * 5000.0 < 0.5 * mean);  // drift over the window << level
}

TEST_CASE("policies consume identical arrival streams under a shared seed") {
  const Scenario sc = load_preset("toy-s6");
  SimConfig base = sc.config;
  base.horizon_arrivals = 200;
  base.rate_switch.reset();

  SimConfig lb = base;
  lb.policy = PolicyKind::lb;
  lb.clusters = ClusterSet::single_all(3, 10.0);
  SimConfig greedy = base;
  greedy.policy = PolicyKind::greedy;

  const SimTrace a = run_simulation(sc.spec, base, SimSeeds{31});
  const SimTrace b = run_simulation(sc.spec, lb, SimSeeds{31});
  const SimTrace c = run_simulation(sc.spec, greedy, SimSeeds{31});

  const auto arrivals_of = [](const SimTrace& tr, int type) {
    std::vector<double> out;
    for (const RequestRecord& r : tr.requests)
      if (r.ev_type == type) out.push_back(r.t_arrive);
    return out;
  };
  for (int i = 0; i < 2; ++i) {
    const std::vector<double> ref = arrivals_of(a, i);
    CHECK(arrivals_of(b, i) == ref);
    CHECK(arrivals_of(c, i) == ref);
  }
}

TEST_CASE("tsv exports are stable, parseable, and header-complete") {
  SimConfig cfg;
  cfg.horizon_arrivals = 5;
  cfg.audit = true;
  const SimTrace trace = run_simulation(single_server(), cfg, SimSeeds{1});
  const std::string req = requests_tsv(trace);
  CHECK(req.rfind("id\t", 0) == 0);
  CHECK(std::count(req.begin(), req.end(), '\n') == 6);  // header + 5 rows
  const std::string grid = grid_tsv(trace);
  CHECK(grid.rfind("t\t", 0) == 0);
  const std::string occ = occupancy_tsv(trace);
  CHECK(occ.rfind("t\t", 0) == 0);
  const std::string aud = audits_tsv(trace);
  CHECK(aud.rfind("request\t", 0) == 0);
  // byte-identical rerun
  const SimTrace again = run_simulation(single_server(), cfg, SimSeeds{1});
  CHECK(requests_tsv(again) == req);
  CHECK(occupancy_tsv(again) == occ);
  CHECK(grid_tsv(again) == grid);
  CHECK(audits_tsv(again) == aud);
}
