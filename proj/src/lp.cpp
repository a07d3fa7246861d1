#include "evroute/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace evroute {

namespace {

constexpr double kPivotEps = 1e-9;
constexpr int kMaxPivots = 10000;

struct Tableau {
  int m = 0;             // rows
  int cols = 0;          // columns excluding rhs
  int rhs = 0;           // rhs column index
  std::vector<std::vector<double>> t;  // m x (cols+1)
  std::vector<double> z;               // cols+1; z[rhs] = -objective
  std::vector<int> basis;              // per row

  void pivot(int row, int col) {
    std::vector<double>& pr = t[row];
    const double p = pr[col];
    for (double& v : pr) v /= p;
    pr[col] = 1.0;  // exact
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = t[i][col];
      if (f == 0.0) continue;
      for (int c = 0; c <= cols; ++c) t[i][c] -= f * pr[c];
      t[i][col] = 0.0;
    }
    const double fz = z[col];
    if (fz != 0.0) {
      for (int c = 0; c <= cols; ++c) z[c] -= fz * pr[c];
      z[col] = 0.0;
    }
    basis[row] = col;
  }

  void rebuild_z(const std::vector<double>& cost) {
    z.assign(cols + 1, 0.0);
    for (int c = 0; c < cols; ++c) z[c] = cost[c];
    for (int i = 0; i < m; ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      for (int c = 0; c <= cols; ++c) z[c] -= cb * t[i][c];
    }
  }

  /* Bland's rule: entering column is the smallest allowed index with a
   * negative reduced cost; the leaving row is the smallest min-ratio row,
   * ties resolved toward the smallest basic variable index. Returns false
   * on unboundedness. */
  bool run(const std::vector<char>& allowed, int& pivots) {
    for (;;) {
      int enter = -1;
      for (int c = 0; c < cols; ++c) {
        if (!allowed[c]) continue;
        if (z[c] < -kPivotEps) { enter = c; break; }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = t[i][enter];
        if (a <= kPivotEps) continue;
        const double ratio = t[i][rhs] / a;
        if (leave < 0 || ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      if (++pivots > kMaxPivots)
        throw SolverError(SolverError::Code::numerical_failure, "simplex pivot limit exceeded");
    }
  }
};

}  // namespace

DenseLpResult solve_dense_lp(const DenseLp& lp) {
  const int n = lp.vars();
  const int me = static_cast<int>(lp.a_eq.size());
  const int mu = static_cast<int>(lp.a_ub.size());
  const int m = me + mu;

  Tableau tb;
  tb.m = m;
  tb.cols = n + mu + m;  // structural | slacks | artificials
  tb.rhs = tb.cols;
  tb.t.assign(m, std::vector<double>(tb.cols + 1, 0.0));
  tb.basis.assign(m, 0);
  std::vector<double> row_sign(m, 1.0);

  double b_scale = 1.0;
  for (int i = 0; i < m; ++i) {
    const bool eq = i < me;
    const std::vector<double>& a = eq ? lp.a_eq[i] : lp.a_ub[i - me];
    const double b = eq ? lp.b_eq[i] : lp.b_ub[i - me];
    for (int c = 0; c < n; ++c) tb.t[i][c] = a[c];
    if (!eq) tb.t[i][n + (i - me)] = 1.0;
    tb.t[i][tb.rhs] = b;
    if (b < 0.0) {
      row_sign[i] = -1.0;
      for (int c = 0; c <= tb.cols; ++c) tb.t[i][c] = -tb.t[i][c];
    }
    tb.t[i][n + mu + i] = 1.0;  // artificial
    tb.basis[i] = n + mu + i;
    b_scale = std::max(b_scale, std::abs(b));
  }

  DenseLpResult res;
  int pivots = 0;

  // Phase 1: minimize the artificial mass.
  std::vector<double> cost1(tb.cols, 0.0);
  for (int i = 0; i < m; ++i) cost1[n + mu + i] = 1.0;
  tb.rebuild_z(cost1);
  std::vector<char> allowed(tb.cols, 1);
  if (!tb.run(allowed, pivots))
    throw SolverError(SolverError::Code::numerical_failure, "phase-1 unbounded (inconsistent tableau)");
  const double infeas = -tb.z[tb.rhs];
  if (infeas > 1e-8 * (1.0 + b_scale)) {
    res.status = LpStatus::infeasible;
    res.iterations = pivots;
    return res;
  }

  // Drive basic artificials out wherever a real pivot exists; rows that
  // cannot be pivoted are redundant and stay inert at value zero.
  for (int i = 0; i < m; ++i) {
    if (tb.basis[i] < n + mu) continue;
    for (int c = 0; c < n + mu; ++c) {
      if (std::abs(tb.t[i][c]) > kPivotEps) {
        tb.pivot(i, c);
        break;
      }
    }
  }

  // Phase 2: original objective; artificials may not re-enter.
  std::vector<double> cost2(tb.cols, 0.0);
  for (int c = 0; c < n; ++c) cost2[c] = lp.c[c];
  tb.rebuild_z(cost2);
  for (int i = 0; i < m; ++i) allowed[n + mu + i] = 0;
  if (!tb.run(allowed, pivots)) {
    res.status = LpStatus::unbounded;
    res.iterations = pivots;
    return res;
  }

  res.status = LpStatus::optimal;
  res.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < n) res.x[tb.basis[i]] = tb.t[i][tb.rhs];
  for (double& v : res.x)
    if (v < 0.0 && v > -1e-9) v = 0.0;
  res.objective = 0.0;
  for (int c = 0; c < n; ++c) res.objective += lp.c[c] * res.x[c];

  // Duals off the final objective row under the artificial (identity)
  // columns: y_i = -z[art_i], mapped back through the row normalization.
  res.dual_eq.assign(me, 0.0);
  res.dual_ub.assign(mu, 0.0);
  for (int i = 0; i < m; ++i) {
    const double y = row_sign[i] * -tb.z[n + mu + i];
    if (i < me) {
      res.dual_eq[i] = y;
    } else {
      res.dual_ub[i - me] = std::max(0.0, -y);
    }
  }
  res.iterations = pivots;
  return res;
}

}  // namespace evroute
