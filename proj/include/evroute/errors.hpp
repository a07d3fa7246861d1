#pragma once

#include <stdexcept>
#include <string>

namespace evroute {

/* Typed runtime errors. Each carries a code so tests can assert on the
 * failure kind without parsing messages. */

struct SpecError : std::runtime_error {
  enum class Code {
    empty_type_set,        // no EV types or no charger types
    orphan_ev_type,        // lambda_i > 0 but no usable station
    negative_rate,         // negative lambda / mu / cost entry
    non_positive_pool,     // N_j < 1
    incompatible_activity  // service draw requested for mu_ij = 0
  };
  Code code;
  SpecError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct PolicyError : std::runtime_error {
  enum class Code {
    time_reversal,      // decay asked to run backwards
    no_usable_station,  // empty candidate set at a routing decision
    bad_cluster         // malformed cluster definition
  };
  Code code;
  PolicyError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct SolverError : std::runtime_error {
  enum class Code {
    numerical_failure  // pivot limit hit or singular basis
  };
  Code code;
  SolverError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct AnalysisError : std::runtime_error {
  enum class Code {
    not_a_forest,         // flow map requested for a cyclic basic graph
    zero_rate_edge,       // basic edge with mu_ij = 0
    dimension_mismatch,   // input vector size != number of EV types
    grid_out_of_range,    // requested time not covered by trace samples
    insufficient_horizon, // convergence diagnosis with horizon < 10/beta
    infeasible_solution,  // diagnostics against an infeasible LP solution
    non_positive_pool     // scaled pool size rounded below 1
  };
  Code code;
  AnalysisError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct ScenarioError : std::runtime_error {
  enum class Code {
    parse_error,    // message names line / field
    unknown_preset
  };
  Code code;
  ScenarioError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}
};

}  // namespace evroute
