#pragma once

#include <string>
#include <vector>

#include "evroute/engine.hpp"

namespace evroute {

/* A scenario bundles the network, the simulation defaults, and the seed. */
struct Scenario {
  std::string name;
  ValidatedSpec spec;
  SimConfig config;
  SimSeeds seeds;
};

/* Built-in scenarios:
 *   toy-s6    - two EV classes, three pools, zero costs, demand surge
 *               reversal after 5000 of 10000 arrivals
 *   example-a - one captive class (unreachable second station), one
 *               flexible class competing for the same pool
 *   example-b - both classes flexible, costs opposing service speeds;
 *               unique plan with a tight pool (positive capacity price)
 */
std::vector<std::string> preset_names();
Scenario load_preset(const std::string& name);  // ScenarioError::unknown_preset

/* Structured-text scenario file:
 *
 *   [network]
 *   ev_types = 2
 *   charger_types = 3
 *   lambda = 50 44
 *   mu   = 1 3 0 ; 0 1 2      # rows separated by ';' (or flat row-major)
 *   cost = 0 0 inf ; inf 0 0  # 'inf' marks an unreachable pair
 *   N = 20 20 20
 *   [processes]               # optional; exponential by default
 *   arrival = exponential     # exponential | deterministic | uniform
 *   service = exponential
 *   [seeds]                   # optional
 *   seed = 12345
 *   [sim]                     # optional simulation defaults
 *   policy = gpd              # gpd | lb | fcsq | greedy
 *   beta = 0.01
 *   horizon_arrivals = 10000
 *   horizon_time = 0
 *   rate_switch_at = 5000
 *   rate_switch_lambda = 44 50
 *   grid_dt = 0.5
 *   clusters = 1 2 3          # station lists, 1-based, ';' between clusters
 *   weights = 10
 *
 * Throws ScenarioError::parse_error naming the offending line/field. */
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "scenario");

/* Loads a preset by name, or parses a scenario file when `name_or_path`
 * exists on disk. */
Scenario load_scenario(const std::string& name_or_path);

std::string to_scenario_text(const Scenario& scenario);

}  // namespace evroute
