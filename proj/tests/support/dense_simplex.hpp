#pragma once

// Dense-tableau simplex oracle, written independently of the solver library:
// no sparse factorization, no pricing machinery, just the textbook two-phase
// method on a full tableau. Bounded variables are compiled away up front
// (shifts, sign flips, splits, and explicit upper-bound rows), artificials
// seed phase one, and Bland's rule guarantees termination. Slow by design;
// the point is that it shares no code or algorithmic shortcuts with the
// engines it checks.

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "duplex/lp.hpp"

namespace testsupport {

struct OracleResult {
  bool optimal = false;
  bool infeasible = false;
  bool failed = false;      // unbounded phase 2 or iteration cap: oracle bug
  double objective = 0.0;   // external sense (offset and sign restored)
};

namespace oracle_detail {

struct Tableau {
  int m = 0, n = 0;                // rows, structural+slack+artificial columns
  std::vector<double> t;           // (m+1) x (n+1); row 0 = costs, last col = rhs
  std::vector<int> basis;          // basis[i] = column basic in row 1+i

  double& at(int i, int j) { return t[static_cast<size_t>(i) * (n + 1) + j]; }
  double at(int i, int j) const { return t[static_cast<size_t>(i) * (n + 1) + j]; }
  double& rhs(int i) { return at(i, n); }

  void pivot(int pr, int pc) {
    const double d = at(pr, pc);
    for (int j = 0; j <= n; ++j) at(pr, j) /= d;
    for (int i = 0; i <= m; ++i) {
      if (i == pr) continue;
      const double f = at(i, pc);
      if (f == 0.0) continue;
      for (int j = 0; j <= n; ++j) at(i, j) -= f * at(pr, j);
    }
    basis[pr - 1] = pc;
  }

  // Runs to optimality over columns [0, allowed). Dantzig pricing with a
  // permanent switch to Bland's rule once the iteration count suggests
  // cycling. Returns false on unbounded or iteration cap.
  bool optimize(int allowed) {
    constexpr double kEps = 1e-9;
    const long long bland_after = 4LL * (m + n);
    for (long long it = 0; it < 200000; ++it) {
      const bool bland = it >= bland_after;
      int pc = -1;
      double best = -kEps;
      for (int j = 0; j < allowed; ++j) {
        const double c = at(0, j);
        if (c < best) {
          pc = j;
          if (bland) break;  // smallest eligible index
          best = c;
        }
      }
      if (pc < 0) return true;
      int pr = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 1; i <= m; ++i) {
        const double a = at(i, pc);
        if (a <= kEps) continue;
        const double ratio = rhs(i) / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (pr < 0 || basis[i - 1] < basis[pr - 1]))) {
          best_ratio = ratio;
          pr = i;
        }
      }
      if (pr < 0) return false;  // unbounded direction
      pivot(pr, pc);
    }
    return false;  // iteration cap
  }
};

}  // namespace oracle_detail

inline OracleResult dense_simplex_solve(const duplex::CompLp& lp) {
  using oracle_detail::Tableau;
  const int m = lp.num_row, n = lp.num_col;

  // Standard-form compilation. Each original variable becomes zero, one, or
  // two nonnegative columns; boxed variables also get one upper-bound row.
  struct Col {
    int var = -1;
    double sign = 1.0;     // column and cost multiplier
    double shift = 0.0;    // x = shift + sign * y
    int bound_row = -1;    // row index of "y <= range", -1 if none
  };
  std::vector<Col> cols;
  std::vector<double> fixed(n, 0.0);
  std::vector<bool> is_fixed(n, false);
  double obj_const = 0.0;
  int bound_rows = 0;

  for (int j = 0; j < n; ++j) {
    const double l = lp.lower[j], u = lp.upper[j];
    const bool lo = l > -duplex::kInf, hi = u < duplex::kInf;
    if (lo && hi && l == u) {
      is_fixed[j] = true;
      fixed[j] = l;
      obj_const += lp.cost[j] * l;
      continue;
    }
    if (lo) {
      Col c;
      c.var = j;
      c.shift = l;
      if (hi) c.bound_row = m + bound_rows++;
      obj_const += lp.cost[j] * l;
      cols.push_back(c);
    } else if (hi) {
      Col c;
      c.var = j;
      c.sign = -1.0;
      c.shift = u;
      obj_const += lp.cost[j] * u;
      cols.push_back(c);
    } else {
      Col plus, minus;
      plus.var = minus.var = j;
      minus.sign = -1.0;
      cols.push_back(plus);
      cols.push_back(minus);
    }
  }

  const int rows = m + bound_rows;
  const int slacks = bound_rows;           // one per bound row
  const int structs = static_cast<int>(cols.size());
  const int arts = rows;
  Tableau tab;
  tab.m = rows;
  tab.n = structs + slacks + arts;
  tab.t.assign(static_cast<size_t>(rows + 1) * (tab.n + 1), 0.0);
  tab.basis.assign(rows, -1);

  std::vector<double> b(rows, 0.0);
  // Ax = 0 with substitutions: A y_part = -A shift_part (fixed terms too).
  for (int j = 0; j < n; ++j) {
    if (!is_fixed[j]) continue;
    for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
      b[lp.col_index[k]] -= lp.col_value[k] * fixed[j];
  }
  for (int cidx = 0; cidx < structs; ++cidx) {
    const Col& c = cols[cidx];
    for (int k = lp.col_start[c.var]; k < lp.col_start[c.var + 1]; ++k) {
      tab.at(1 + lp.col_index[k], cidx) += c.sign * lp.col_value[k];
      b[lp.col_index[k]] -= lp.col_value[k] * c.shift;
    }
    if (c.bound_row >= 0) {
      tab.at(1 + c.bound_row, cidx) = 1.0;
      b[c.bound_row] = lp.upper[c.var] - lp.lower[c.var];
    }
  }
  for (int s = 0; s < slacks; ++s) tab.at(1 + m + s, structs + s) = 1.0;

  // Orient rows for nonnegative right-hand sides, then seed with artificials.
  for (int i = 0; i < rows; ++i) {
    double sgn = b[i] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < structs + slacks; ++j) tab.at(1 + i, j) *= sgn;
    tab.rhs(1 + i) = sgn * b[i];
    tab.at(1 + i, structs + slacks + i) = 1.0;
    tab.basis[i] = structs + slacks + i;
  }

  // Phase one: minimize the artificial sum. Cost row starts as the negated
  // column sums so the artificial basis prices out to zero.
  for (int j = 0; j <= tab.n; ++j) {
    double s = 0.0;
    for (int i = 1; i <= rows; ++i) s += tab.at(i, j);
    tab.at(0, j) = (j >= structs + slacks && j < tab.n) ? 0.0 : -s;
  }
  OracleResult res;
  if (!tab.optimize(tab.n)) {
    res.failed = true;
    return res;
  }
  if (-tab.rhs(0) > 1e-7) {  // leftover artificial value
    res.infeasible = true;
    return res;
  }

  // Drive surviving artificials out of the basis when their row has any real
  // column to pivot on; all-zero rows are redundant and stay put harmlessly.
  for (int i = 1; i <= rows; ++i) {
    if (tab.basis[i - 1] < structs + slacks) continue;
    for (int j = 0; j < structs + slacks; ++j)
      if (std::abs(tab.at(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
  }

  // Phase two: original costs, artificial columns locked out.
  for (int j = 0; j <= tab.n; ++j) tab.at(0, j) = 0.0;
  for (int cidx = 0; cidx < structs; ++cidx)
    tab.at(0, cidx) = cols[cidx].sign * lp.cost[cols[cidx].var];
  for (int i = 1; i <= rows; ++i) {
    const int bj = tab.basis[i - 1];
    const double cb = tab.at(0, bj);
    if (cb == 0.0) continue;
    for (int j = 0; j <= tab.n; ++j) tab.at(0, j) -= cb * tab.at(i, j);
  }
  if (!tab.optimize(structs + slacks)) {
    res.failed = true;
    return res;
  }

  res.optimal = true;
  res.objective = duplex::external_objective(lp, -tab.rhs(0) + obj_const);
  return res;
}

}  // namespace testsupport
