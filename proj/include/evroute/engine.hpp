#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evroute/policies.hpp"

namespace evroute {

enum class PolicyKind { gpd, lb, fcsq, greedy };

std::string policy_name(PolicyKind k);
std::optional<PolicyKind> policy_from_name(const std::string& name);

/* Switch the arrival-rate vector once a fixed number of arrivals has been
 * routed. Draws made after the switch use the new rates; interarrival gaps
 * already drawn stay as drawn. at_arrival = 0 switches before the first
 * draw. */
struct RateSwitch {
  long at_arrival = 0;
  std::vector<double> new_rates;
};

struct SimConfig {
  PolicyKind policy = PolicyKind::gpd;
  double beta = 0.01;
  ClusterSet clusters;  // lb only
  ClusterDecayMode cluster_decay = ClusterDecayMode::rate_while_above;
  bool fcsq_realized_estimate = false;

  /* Exactly one horizon must be positive: run until this many arrivals have
   * been routed, or until arrivals past this time are cut off. Queues are
   * drained to completion either way. */
  long horizon_arrivals = 0;
  double horizon_time = 0.0;

  std::optional<RateSwitch> rate_switch;
  double grid_dt = 1.0;                       // metric sampling resolution
  bool audit = false;                         // keep per-decision score logs
  std::vector<double> initial_virtual_queues; // empty = zeros
};

struct SimSeeds {
  std::uint64_t base = 1;
};

struct RequestRecord {
  long id = 0;
  int ev_type = 0;
  int station = 0;
  double t_arrive = 0.0;
  double t_start = 0.0;
  double t_complete = 0.0;
  double service = 0.0;

  double wait() const { return t_start - t_arrive; }
};

struct OccupancyRow {
  double t = 0.0;
  int station = 0;
  int busy = 0;
  int queue_len = 0;
};

/* Uniform-grid sample of the metrics that diffusion analysis consumes:
 * virtual queue values, their exact running integrals, and cumulative
 * routing counts per activity (row-major I x J). */
struct GridSample {
  double t = 0.0;
  std::vector<double> virtual_q;
  std::vector<double> virtual_q_integral;
  std::vector<long> routed;
};

struct DecisionAudit {
  long request = 0;
  int chosen = 0;
  std::vector<std::pair<int, double>> scores;
};

struct SimTrace {
  int ev_types = 0;
  int charger_types = 0;
  long total_arrivals = 0;
  double arrival_window_end = 0.0;  // time of the last routed arrival (or the time horizon)
  double end_time = 0.0;            // last event (drain included)
  std::vector<RequestRecord> requests;
  std::vector<OccupancyRow> occupancy;
  std::vector<GridSample> grid;
  std::vector<DecisionAudit> audits;
  std::vector<double> queue_len_integral;  // per station, over [0, end_time]
  std::vector<long> routed_final;          // row-major I x J

  long routed(int i, int j) const { return routed_final[static_cast<size_t>(i) * charger_types + j]; }
};

/* Discrete-event run. Completions precede arrivals at equal timestamps;
 * remaining ties follow insertion order. Stations serve FIFO and never
 * idle a charger while their queue is nonempty. The fcsq policy requires
 * `basic`. */
SimTrace run_simulation(const ValidatedSpec& spec, const SimConfig& cfg, SimSeeds seeds,
                        const BasicActivityGraph* basic = nullptr);

struct StationSummary {
  long count = 0;
  double max_wait = 0.0;
  double mean_wait = 0.0;
  double zero_wait_fraction = 0.0;
  double time_avg_queue_len = 0.0;
};

struct Summary {
  long count = 0;
  double max_wait = 0.0;
  double mean_wait = 0.0;
  double zero_wait_fraction = 0.0;
  double delay_inequality = 0.0;  // spread of per-station mean waits (served stations)
  std::vector<StationSummary> stations;
  Matrix routing_rates;  // routed counts / arrival window length
};

Summary summarize(const SimTrace& trace);

/* Delimited-text exports (tab separated, one header line, deterministic
 * formatting so reruns are byte-identical). */
std::string requests_tsv(const SimTrace& trace);
std::string occupancy_tsv(const SimTrace& trace);
std::string grid_tsv(const SimTrace& trace);
std::string audits_tsv(const SimTrace& trace);
std::string to_text(const Summary& summary);

}  // namespace evroute
