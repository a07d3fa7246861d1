#include "doctest.h"

#include <cmath>
#include <vector>

#include "evroute/planner.hpp"
#include "evroute/policies.hpp"

using namespace evroute;

namespace {

/* One EV type reaching two stations; costs and rates configurable. */
ValidatedSpec two_station_network(double c1, double c2, double mu1, double mu2,
                                  int n1 = 2, int n2 = 2) {
  NetworkSpec net;
  net.ev_types = 1;
  net.charger_types = 2;
  net.arrival_rates = {1.0};
  net.service_rates = {{mu1, mu2}};
  net.costs = {{c1, c2}};
  net.pool_sizes = {n1, n2};
  return validate_spec(net);
}

ValidatedSpec three_station_network() {
  NetworkSpec net;
  net.ev_types = 1;
  net.charger_types = 3;
  net.arrival_rates = {1.0};
  net.service_rates = {{1.0, 1.0, 1.0}};
  net.costs = {{3.0, 1.0, kUnreachable}};
  net.pool_sizes = {2, 2, 2};
  return validate_spec(net);
}

BasicActivityGraph graph_for(const ValidatedSpec& spec, std::vector<std::pair<int, int>> edges) {
  LpSolution sol;
  sol.status = LpStatus::optimal;
  sol.primal_rates.assign(spec.ev_types(), std::vector<double>(spec.charger_types(), 0.0));
  for (const auto& [i, j] : edges) sol.primal_rates[i][j] = 1.0;
  return extract_basic_activities(sol, spec);
}

}  // namespace

TEST_CASE("virtual queues decay at the pool rate and floor at zero") {
  const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0, 2, 3);
  GpdState st = GpdState::make(spec, 0.1, {5.0, 5.0});
  CHECK(st.decay_rate == std::vector<int>{2, 3});

  SUBCASE("partial decay") {
    st.decay_to(1.5);
    CHECK(st.q[0] == doctest::Approx(5.0 - 2.0 * 1.5));  // 2.0
    CHECK(st.q[1] == doctest::Approx(5.0 - 3.0 * 1.5));  // 0.5
  }
  SUBCASE("decay hits the floor") {
    st.decay_to(4.0);
    CHECK(st.q[0] == 0.0);
    CHECK(st.q[1] == 0.0);
    // integral counts only the strictly positive segment: Q0 reaches 0 at t=2.5
    CHECK(st.q_integral[0] == doctest::Approx(5.0 * 2.5 - 0.5 * 2.0 * 2.5 * 2.5));
  }
  SUBCASE("zero elapsed time changes nothing") {
    st.decay_to(0.0);
    CHECK(st.q[0] == 5.0);
    CHECK(st.q[1] == 5.0);
  }
  SUBCASE("split decay equals one-shot decay, including integrals") {
    GpdState other = GpdState::make(spec, 0.1, {5.0, 5.0});
    st.decay_to(0.7);
    st.decay_to(1.9);
    st.decay_to(4.0);
    other.decay_to(4.0);
    for (int j = 0; j < 2; ++j) {
      CHECK(st.q[j] == doctest::Approx(other.q[j]).epsilon(1e-13));
      CHECK(st.q_integral[j] == doctest::Approx(other.q_integral[j]).epsilon(1e-13));
    }
  }
  SUBCASE("const peeks match a later mutation") {
    const double v0 = st.value_at(0, 1.5);
    const double i0 = st.integral_at(0, 4.0);
    st.decay_to(1.5);
    CHECK(st.q[0] == doctest::Approx(v0));
    st.decay_to(4.0);
    CHECK(st.q_integral[0] == doctest::Approx(i0));
  }
  SUBCASE("going backwards in time is an error") {
    st.decay_to(2.0);
    CHECK_THROWS_AS(st.decay_to(1.0), PolicyError);
    try {
      st.decay_to(1.0);
    } catch (const PolicyError& e) {
      CHECK(e.code == PolicyError::Code::time_reversal);
    }
  }
}

TEST_CASE("state construction validates its inputs") {
  const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0);
  CHECK_THROWS_AS(GpdState::make(spec, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GpdState::make(spec, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(GpdState::make(spec, 0.1, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GpdState::make(spec, 0.1, {1.0, -1.0}), std::invalid_argument);
  const GpdState st = GpdState::make(spec, 0.1);
  CHECK(st.q == std::vector<double>{0.0, 0.0});
}

TEST_CASE("price-directed routing picks the cheapest cost-plus-price station") {
  SUBCASE("a long queue overrides equal costs") {
    const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 2.0);
    GpdState st = GpdState::make(spec, 0.1, {10.0, 0.0});
    const RoutingDecision d = st.route(0, spec);
    REQUIRE(d.scores.size() == 2);
    CHECK(d.scores[0].second == doctest::Approx(1.0));  // 0 + 0.1*10/1
    CHECK(d.scores[1].second == doctest::Approx(0.0));
    CHECK(d.station == 1);
    CHECK(st.q[1] == doctest::Approx(0.5));  // bumped by 1/mu = 1/2
    CHECK(st.q[0] == doctest::Approx(10.0));
  }
  SUBCASE("an unreachable station never wins, whatever its queue") {
    const ValidatedSpec spec = two_station_network(1.0, kUnreachable, 1.0, 2.0);
    GpdState st = GpdState::make(spec, 0.1, {10.0, 0.0});
    const RoutingDecision d = st.route(0, spec);
    CHECK(d.station == 0);
    CHECK(d.scores.size() == 1);  // only usable candidates are scored
    CHECK(st.q[0] == doctest::Approx(11.0));
  }
  SUBCASE("exact ties break to the lowest station index") {
    const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0);
    GpdState st = GpdState::make(spec, 0.1);
    const RoutingDecision d = st.route(0, spec);
    CHECK(d.station == 0);
  }
  SUBCASE("a type with no usable station cannot be routed") {
    NetworkSpec net;
    net.ev_types = 2;
    net.charger_types = 1;
    net.arrival_rates = {1.0, 0.0};  // zero-demand type may be orphaned
    net.service_rates = {{1.0}, {0.0}};
    net.costs = {{0.0}, {0.0}};
    net.pool_sizes = {2};
    const ValidatedSpec spec = validate_spec(net);
    GpdState st = GpdState::make(spec, 0.1);
    try {
      st.route(1, spec);
      FAIL("expected PolicyError");
    } catch (const PolicyError& e) {
      CHECK(e.code == PolicyError::Code::no_usable_station);
    }
  }
}

TEST_CASE("cluster queues decay only while their priced sum exceeds the weight") {
  const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0, 1, 1);
  ClusterSet cs;
  cs.members = {{0, 1}};
  cs.weights = {1.0};
  LbState st = LbState::make(spec, 0.1, cs);
  // initialization spreads the weight: W/(beta*|l|) = 1/(0.1*2) = 5 each
  CHECK(st.values[0][0] == doctest::Approx(5.0));
  CHECK(st.values[0][1] == doctest::Approx(5.0));

  SUBCASE("decay freezes exactly at the crossing") {
    st.values[0] = {8.0, 4.0};  // beta-sum = 1.2 > W = 1
    st.decay_to(2.0);
    // crossing at (1.2 - 1.0) / (0.1 * (1+1)) = 1.0 < 2.0: each drops by N*1
    CHECK(st.values[0][0] == doctest::Approx(7.0));
    CHECK(st.values[0][1] == doctest::Approx(3.0));
    // another 2 units of time: already at the weight, nothing moves
    st.decay_to(4.0);
    CHECK(st.values[0][0] == doctest::Approx(7.0));
    CHECK(st.values[0][1] == doctest::Approx(3.0));
  }
  SUBCASE("sum below the weight never decays") {
    st.values[0] = {4.0, 4.0};  // beta-sum 0.8 < 1
    st.decay_to(3.0);
    CHECK(st.values[0][0] == doctest::Approx(4.0));
    CHECK(st.values[0][1] == doctest::Approx(4.0));
  }
  SUBCASE("sum exactly at the weight never decays") {
    st.values[0] = {5.0, 5.0};
    st.decay_to(3.0);
    CHECK(st.values[0][0] == doctest::Approx(5.0));
  }
  SUBCASE("individual entries may go negative while the sum stays above") {
    st.values[0] = {30.0, 0.5};  // beta-sum 3.05
    st.decay_to(5.0);            // crossing at (3.05-1)/0.2 = 10.25 > 5: full decay
    CHECK(st.values[0][0] == doctest::Approx(25.0));
    CHECK(st.values[0][1] == doctest::Approx(-4.5));  // cluster entries carry no floor
  }
  SUBCASE("const cluster sum matches a later mutation") {
    st.values[0] = {8.0, 4.0};
    const double s = st.cluster_sum_at(0, 2.0) + st.cluster_sum_at(1, 2.0);
    st.decay_to(2.0);
    CHECK(s == doctest::Approx(st.values[0][0] + st.values[0][1]));
  }
}

TEST_CASE("impulse decay subtracts one pool's worth per evaluation above the weight") {
  const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0, 1, 1);
  ClusterSet cs;
  cs.members = {{0, 1}};
  cs.weights = {1.0};
  LbState st = LbState::make(spec, 0.1, cs, ClusterDecayMode::impulse_on_trigger);
  st.values[0] = {8.0, 4.0};
  st.decay_to(0.5);
  CHECK(st.values[0][0] == doctest::Approx(7.0));
  CHECK(st.values[0][1] == doctest::Approx(3.0));
  st.values[0] = {0.5, 0.4};  // beta-sum 0.09 < W: no impulse
  st.decay_to(1.0);
  CHECK(st.values[0][0] == doctest::Approx(0.5));
}

TEST_CASE("cluster-aware routing adds cluster queues to the station price") {
  const ValidatedSpec spec = two_station_network(0.0, 0.0, 1.0, 1.0, 1, 1);
  ClusterSet cs;
  cs.members = {{0, 1}};
  cs.weights = {1.0};

  SUBCASE("the station with the lighter cluster queue wins") {
    LbState st = LbState::make(spec, 0.1, cs);
    st.values[0] = {10.0, 0.0};
    const RoutingDecision d = st.route(0, spec);
    CHECK(d.station == 1);
    CHECK(d.scores[0].second == doctest::Approx(1.0));
    CHECK(d.scores[1].second == doctest::Approx(0.0));
    // both the station queue and the cluster entry get bumped by 1/mu
    CHECK(st.gpd.q[1] == doctest::Approx(1.0));
    CHECK(st.values[0][1] == doctest::Approx(1.0));
    CHECK(st.values[0][0] == doctest::Approx(10.0));
  }
  SUBCASE("zeroed cluster queues reduce to plain price-directed routing") {
    LbState st = LbState::make(spec, 0.1, cs);
    st.values[0] = {0.0, 0.0};
    st.gpd.q = {3.0, 1.0};
    GpdState plain = GpdState::make(spec, 0.1, {3.0, 1.0});
    const RoutingDecision a = st.route(0, spec);
    const RoutingDecision b = plain.route(0, spec);
    CHECK(a.station == b.station);
    REQUIRE(a.scores.size() == b.scores.size());
    for (size_t k = 0; k < a.scores.size(); ++k)
      CHECK(a.scores[k].second == doctest::Approx(b.scores[k].second));
  }
  SUBCASE("overlapping clusters all get bumped") {
    ClusterSet overlap;
    overlap.members = {{0, 1}, {1}};
    overlap.weights = {1.0, 2.0};
    LbState st = LbState::make(spec, 0.1, overlap);
    st.values = {{0.0, 0.0}, {0.0}};
    st.gpd.q = {5.0, 0.0};
    const RoutingDecision d = st.route(0, spec);
    CHECK(d.station == 1);
    CHECK(st.values[0][1] == doctest::Approx(1.0));
    CHECK(st.values[1][0] == doctest::Approx(1.0));
    CHECK(st.values[0][0] == doctest::Approx(0.0));
  }
}

TEST_CASE("free-charger routing prefers the largest free fraction") {
  NetworkSpec net;
  net.ev_types = 1;
  net.charger_types = 3;
  net.arrival_rates = {1.0};
  net.service_rates = {{1.0, 1.0, 1.0}};
  net.costs = {{0.0, 0.0, 0.0}};
  net.pool_sizes = {20, 20, 20};
  const ValidatedSpec spec = validate_spec(net);
  const BasicActivityGraph basic = graph_for(spec, {{0, 0}, {0, 1}});  // station 2 not basic

  std::vector<StationSnapshot> stations(3);
  for (int j = 0; j < 3; ++j) {
    stations[j].pool_size = 20;
    stations[j].queued_by_type = {0};
  }
  stations[0].free_chargers = 5;
  stations[1].free_chargers = 6;
  stations[2].free_chargers = 19;  // best fraction, but not a candidate

  const RoutingDecision d = fcsq_route(0, stations, basic, spec);
  CHECK(d.station == 1);
  CHECK(d.scores.size() == 2);
}

TEST_CASE("with every candidate busy the smallest expected backlog wins") {
  NetworkSpec net;
  net.ev_types = 2;
  net.charger_types = 2;
  net.arrival_rates = {1.0, 1.0};
  net.service_rates = {{1.0, 2.0}, {2.0, 1.0}};
  net.costs = {{0.0, 0.0}, {0.0, 0.0}};
  net.pool_sizes = {10, 10};
  const ValidatedSpec spec = validate_spec(net);
  const BasicActivityGraph basic = graph_for(spec, {{0, 0}, {0, 1}, {1, 1}});

  std::vector<StationSnapshot> stations(2);
  stations[0].pool_size = 10;
  stations[0].free_chargers = 0;
  stations[0].queued_by_type = {8, 0};  // 8 of type 0 at rate 1: backlog 8/10 = 0.8
  stations[1].pool_size = 10;
  stations[1].free_chargers = 0;
  stations[1].queued_by_type = {4, 3};  // 4/2 + 3/1 = 5: backlog 0.5

  const RoutingDecision d = fcsq_route(0, stations, basic, spec);
  CHECK(d.station == 1);
  CHECK(d.scores[0].second == doctest::Approx(0.8));
  CHECK(d.scores[1].second == doctest::Approx(0.5));

  SUBCASE("realized mode reads the pre-drawn work instead") {
    std::vector<StationSnapshot> drawn = stations;
    drawn[0].queued_work = 1.0;  // 0.1 per server
    drawn[1].queued_work = 9.0;  // 0.9 per server
    const RoutingDecision r = fcsq_route(0, drawn, basic, spec, true);
    CHECK(r.station == 0);
  }
  SUBCASE("one free charger beats every queue estimate") {
    std::vector<StationSnapshot> mixed = stations;
    mixed[0].free_chargers = 1;
    const RoutingDecision r = fcsq_route(0, mixed, basic, spec);
    CHECK(r.station == 0);
  }
  SUBCASE("ties break to the lowest index") {
    std::vector<StationSnapshot> tied = stations;
    tied[0].queued_by_type = {5, 0};  // backlog 0.5 at both
    const RoutingDecision r = fcsq_route(0, tied, basic, spec);
    CHECK(r.station == 0);
  }
}

TEST_CASE("types without basic activities fall back to all usable stations") {
  NetworkSpec net;
  net.ev_types = 2;
  net.charger_types = 2;
  net.arrival_rates = {1.0, 1.0};
  net.service_rates = {{1.0, 1.0}, {1.0, 1.0}};
  net.costs = {{0.0, 0.0}, {0.0, 0.0}};
  net.pool_sizes = {4, 4};
  const ValidatedSpec spec = validate_spec(net);
  const BasicActivityGraph basic = graph_for(spec, {{0, 0}});  // type 1 has no edges

  std::vector<StationSnapshot> stations(2);
  for (int j = 0; j < 2; ++j) {
    stations[j].pool_size = 4;
    stations[j].queued_by_type = {0, 0};
  }
  stations[0].free_chargers = 1;
  stations[1].free_chargers = 3;
  const RoutingDecision d = fcsq_route(1, stations, basic, spec);
  CHECK(d.station == 1);  // full usable fallback, best free fraction

  // type 0 is restricted to its single basic station
  const RoutingDecision r = fcsq_route(0, stations, basic, spec);
  CHECK(r.station == 0);
}

TEST_CASE("cost-only routing") {
  const ValidatedSpec spec = three_station_network();
  const RoutingDecision d = greedy_route(0, spec);
  CHECK(d.station == 1);  // cost 1 < 3, station 3 unreachable

  const ValidatedSpec cheap = two_station_network(0.0, 0.0, 1.0, 1.0);
  CHECK(greedy_route(0, cheap).station == 0);  // tie to the lowest index

  NetworkSpec net;
  net.ev_types = 2;
  net.charger_types = 2;
  net.arrival_rates = {1.0, 0.0};
  net.service_rates = {{1.0, 1.0}, {1.0, 1.0}};
  net.costs = {{0.0, 0.0}, {kUnreachable, kUnreachable}};
  net.pool_sizes = {2, 2};
  const ValidatedSpec orphan = validate_spec(net);
  CHECK_THROWS_AS(greedy_route(1, orphan), PolicyError);
}
