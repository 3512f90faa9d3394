#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "duplex/errors.hpp"

namespace duplex {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared numerical tolerances. Defaults are the working values used across the
// library and the CLI.
struct Tolerances {
  double primal = 1e-7;       // bound violation below this is feasible
  double dual = 1e-7;         // reduced-cost violation below this is feasible
  double pivot = 1e-9;        // smallest acceptable pivot magnitude
  double harris_relax = 1e-7; // ratio-test relaxation of reduced-cost bounds
  double zero_drop = 1e-14;   // values below this are treated as exact zeros
};

// LP in computational form:
//
//   minimize c'x  subject to  Ax = 0,  l <= x <= u
//
// with n = num_col total columns of which the last m = num_row are logical
// columns forming an identity submatrix (coefficient +1, one per row). Bounds
// may be +/-infinity. Columns are stored compressed column-wise, logicals
// included explicitly.
struct CompLp {
  std::string name;
  int num_row = 0;
  int num_col = 0;  // structural + logical

  std::vector<int> col_start;  // size num_col + 1
  std::vector<int> col_index;  // row indices
  std::vector<double> col_value;

  std::vector<double> cost;   // size num_col (logicals carry cost 0)
  std::vector<double> lower;  // size num_col
  std::vector<double> upper;  // size num_col

  // Objective sense bookkeeping: the solver always minimizes `cost`. If the
  // source model maximizes, costs were negated and this flag records it.
  bool maximize_negated = false;
  double obj_offset = 0.0;  // constant added to the (sign-adjusted) objective

  // Row-wise copy of the structural part only, used by the row-oriented
  // pivotal-row kernel. Built by build_rows().
  std::vector<int> row_start;
  std::vector<int> row_index;  // structural column ids
  std::vector<double> row_value;

  int num_struct() const { return num_col - num_row; }
  int logical(int row) const { return num_struct() + row; }
  bool is_logical(int col) const { return col >= num_struct(); }

  int col_count(int j) const { return col_start[j + 1] - col_start[j]; }

  void build_rows() {
    const int ns = num_struct();
    row_start.assign(num_row + 1, 0);
    for (int j = 0; j < ns; ++j)
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) row_start[col_index[k] + 1]++;
    for (int i = 0; i < num_row; ++i) row_start[i + 1] += row_start[i];
    row_index.assign(row_start[num_row], 0);
    row_value.assign(row_start[num_row], 0.0);
    std::vector<int> fill(row_start.begin(), row_start.end() - 1);
    for (int j = 0; j < ns; ++j)
      for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
        const int i = col_index[k];
        row_index[fill[i]] = j;
        row_value[fill[i]] = col_value[k];
        ++fill[i];
      }
  }

  // Structural consistency check; returns false with no throw so tests can
  // probe deliberately broken instances.
  bool well_formed() const {
    if (num_col <= num_row || num_row < 0) return false;
    if (static_cast<int>(col_start.size()) != num_col + 1) return false;
    if (col_start[0] != 0 || col_start[num_col] != static_cast<int>(col_index.size())) return false;
    if (col_index.size() != col_value.size()) return false;
    if (static_cast<int>(cost.size()) != num_col) return false;
    if (static_cast<int>(lower.size()) != num_col) return false;
    if (static_cast<int>(upper.size()) != num_col) return false;
    for (int j = 0; j < num_col; ++j) {
      if (col_start[j] > col_start[j + 1]) return false;
      if (lower[j] > upper[j]) return false;
      if (lower[j] == kInf || upper[j] == -kInf) return false;
    }
    for (int i = 0; i < num_row; ++i) {
      const int j = logical(i);
      if (col_count(j) != 1) return false;
      if (col_index[col_start[j]] != i || col_value[col_start[j]] != 1.0) return false;
    }
    for (int k = 0; k < static_cast<int>(col_index.size()); ++k)
      if (col_index[k] < 0 || col_index[k] >= num_row) return false;
    return true;
  }
};

// Status of a variable relative to the current basis.
enum class VarStatus : unsigned char {
  kBasic,
  kAtLower,
  kAtUpper,
  kFixed,  // lower == upper; never enters the ratio test
  kFree,   // both bounds infinite, rests at zero
};

// Basis: which column is basic in each row, plus the status of every column.
struct Basis {
  std::vector<int> basic;          // size m; basic[i] = column basic in row i
  std::vector<VarStatus> status;   // size n
  std::vector<int> position_of;    // size n; basis position, or -1 if nonbasic

  void rebuild_positions() {
    position_of.assign(status.size(), -1);
    for (int i = 0; i < static_cast<int>(basic.size()); ++i) position_of[basic[i]] = i;
  }

  bool well_formed(const CompLp& lp) const {
    if (static_cast<int>(basic.size()) != lp.num_row) return false;
    if (static_cast<int>(status.size()) != lp.num_col) return false;
    std::vector<char> seen(lp.num_col, 0);
    for (int i = 0; i < lp.num_row; ++i) {
      const int j = basic[i];
      if (j < 0 || j >= lp.num_col || seen[j]) return false;
      seen[j] = 1;
      if (status[j] != VarStatus::kBasic) return false;
    }
    for (int j = 0; j < lp.num_col; ++j) {
      switch (status[j]) {
        case VarStatus::kBasic:
          if (!seen[j]) return false;
          break;
        case VarStatus::kAtLower:
          if (lp.lower[j] == -kInf) return false;
          break;
        case VarStatus::kAtUpper:
          if (lp.upper[j] == kInf) return false;
          break;
        case VarStatus::kFixed:
          if (lp.lower[j] != lp.upper[j]) return false;
          break;
        case VarStatus::kFree:
          if (lp.lower[j] != -kInf || lp.upper[j] != kInf) return false;
          break;
      }
    }
    return true;
  }
};

// Resting value of a nonbasic variable.
inline double nonbasic_value(const CompLp& lp, VarStatus s, int j) {
  switch (s) {
    case VarStatus::kAtLower:
    case VarStatus::kFixed:
      return lp.lower[j];
    case VarStatus::kAtUpper:
      return lp.upper[j];
    case VarStatus::kFree:
      return 0.0;
    case VarStatus::kBasic:
      break;
  }
  assert(false && "basic variable has no resting value");
  return 0.0;
}

// Magnitude of the bound violation of value x in [l, u]: l - x if below, x - u
// if above, else zero. Always nonnegative.
inline double primal_infeasibility(double x, double l, double u) {
  if (x < l) return l - x;
  if (x > u) return x - u;
  return 0.0;
}

// Sign of the violation: -1 below lower, +1 above upper, 0 inside.
inline int infeasibility_sign(double x, double l, double u, double tol) {
  if (x < l - tol) return -1;
  if (x > u + tol) return +1;
  return 0;
}

// Reduced-cost feasibility of a nonbasic variable: at lower requires d >=
// -tol, at upper d <= tol, free |d| <= tol, fixed always feasible.
inline bool is_dual_feasible(VarStatus s, double d, double tol) {
  switch (s) {
    case VarStatus::kAtLower:
      return d >= -tol;
    case VarStatus::kAtUpper:
      return d <= tol;
    case VarStatus::kFree:
      return std::abs(d) <= tol;
    case VarStatus::kFixed:
    case VarStatus::kBasic:
      return true;
  }
  return true;
}

// Row selection measure: infeasibility over pricing weight. The weight is the
// squared row norm of the basis inverse and must be positive.
inline double attractiveness(int row, double infeas, double weight) {
  if (!(weight > 0.0)) throw NonPositiveWeight(row, weight);
  return infeas / weight;
}

// Internal (minimization-form) objective c'x for the given basis and basic
// values. Nonbasic variables sit at their resting values.
inline double compute_objective(const CompLp& lp, const Basis& basis,
                                const std::vector<double>& x_basic) {
  double f = 0.0;
  for (int i = 0; i < lp.num_row; ++i) f += lp.cost[basis.basic[i]] * x_basic[i];
  for (int j = 0; j < lp.num_col; ++j)
    if (basis.status[j] != VarStatus::kBasic) f += lp.cost[j] * nonbasic_value(lp, basis.status[j], j);
  return f;
}

// Converts the internal minimization objective into the objective of the
// source model (undoing cost negation, adding the constant term).
inline double external_objective(const CompLp& lp, double internal) {
  return (lp.maximize_negated ? -internal : internal) + lp.obj_offset;
}

}  // namespace duplex
