#pragma once

#include <vector>

#include "evroute/errors.hpp"

namespace evroute {

/* Small dense linear program:
 *   minimize    c . x
 *   subject to  a_eq x  = b_eq
 *               a_ub x <= b_ub
 *               x >= 0
 */
struct DenseLp {
  std::vector<double> c;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;

  int vars() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct DenseLpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;        // primal solution (vars)
  double objective = 0.0;
  std::vector<double> dual_eq;  // free sign, one per equality row
  std::vector<double> dual_ub;  // >= 0: objective increase per unit of b_ub tightening
  int iterations = 0;
};

/* Two-phase primal simplex on a dense tableau with Bland's rule (smallest
 * index enters; ratio ties resolved toward the smallest basic index), so
 * the method terminates on degenerate instances. Every row carries an
 * artificial column; duals are read off the final objective row under the
 * artificial (initial identity) columns. Throws SolverError on pivot-limit
 * exhaustion. */
DenseLpResult solve_dense_lp(const DenseLp& lp);

}  // namespace evroute
