#pragma once

#include <string>
#include <vector>

#include "evroute/diffusion.hpp"
#include "evroute/scenario.hpp"

namespace evroute {

/* (policy x replication) sweep over one scenario. Replication k runs with
 * seed base seed_base + k for every policy, so policies are compared on the
 * same arrival data. */
struct ExperimentPlan {
  Scenario scenario;
  std::vector<PolicyKind> policies;
  int replications = 1;
  std::uint64_t seed_base = 1;
  std::string out_dir;  // empty = no files, results returned only
};

struct CellResult {
  PolicyKind policy = PolicyKind::gpd;
  int replication = 0;
  std::uint64_t seed = 0;
  Summary summary;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::string comparison_tsv;
  std::string manifest;
};

/* Runs all cells (writing per-cell artifacts as each finishes when out_dir
 * is set), then the cross-policy comparison table and a manifest of the
 * resolved configuration. Throws std::invalid_argument on an empty policy
 * list before anything is written. */
ExperimentResult run_experiment(const ExperimentPlan& plan);

std::string median_block(const ExperimentResult& result);

}  // namespace evroute
