#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "duplex/errors.hpp"
#include "duplex/factor.hpp"
#include "duplex/lp.hpp"
#include "duplex/sparse_vector.hpp"
#include "duplex/timing.hpp"

namespace duplex {

enum class SolveStatus {
  kOptimal,
  kDualUnbounded,  // dual ray found: the primal is infeasible
  kIterationLimit,
  kTimeLimit,
  kNumericalFailure,
};

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kDualUnbounded:
      return "dual-unbounded";
    case SolveStatus::kIterationLimit:
      return "iteration-limit";
    case SolveStatus::kTimeLimit:
      return "time-limit";
    case SolveStatus::kNumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

// Basis-update scheme applied at the end of each iteration.
enum class UpdateScheme { kFt, kPf, kApf };

// Options of the multi-iteration parallel engine.
struct PamiOptions {
  int s = 8;                    // candidate row count per major cycle
  double cutoff = 0.95;         // minor candidate quality cutoff psi, 0 < psi <= 1.001
  double density_revert = 0.10; // run update tasks inline when results are denser than this
};

struct SolveOptions {
  Tolerances tol;
  FactorOptions factor;
  UpdateScheme scheme = UpdateScheme::kFt;
  int workers = 1;
  long long iteration_limit = -1;  // < 0: unlimited
  double time_limit = -1.0;        // seconds; < 0: unlimited
  unsigned seed = 0;
  int candidate_list = 32;  // row-choice shortlist capacity
  PamiOptions pami;
};

// Solve-route statistics kept per worker and merged at the end.
struct OpCounters {
  long long ftran = 0, ftran_hyper = 0;
  long long btran = 0, btran_hyper = 0;
  void merge(const OpCounters& o) {
    ftran += o.ftran;
    ftran_hyper += o.ftran_hyper;
    btran += o.btran;
    btran_hyper += o.btran_hyper;
  }
};

// Per-worker bundle: triangular-solve scratch, component stopwatches, and
// solve-route counters. Parallel engines own one per worker and merge.
struct WorkerCtx {
  SolveWorkspace ws;
  ComponentClock clock;
  OpCounters counts;
  std::vector<int> screen;  // row-screen scratch; per worker so block tasks never share it
};

// Audit counters recorded by the multi-pivot engine around its deferred
// update groups; zero mismatches means the task-count law and the early-flip
// pivot cap held on every major iteration.
struct PamiAudit {
  long long update_groups = 0;
  long long task_count_mismatches = 0;  // solves launched != 2t (+1 with flips)
  long long orphan_breaches = 0;        // pivot cap ignored after early flips
};

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0.0;  // in the source model's sense (offset included)
  std::vector<double> col_value;
  std::vector<double> dual_row;
  std::vector<double> dual_col;
  Basis basis;
  long long iterations = 0;
  int inverts = 0;
  double wall_seconds = 0.0;
  ComponentClock clock;
  OpCounters counts;
  std::vector<std::pair<int, int>> pivots;  // (leaving row, entering column)
  std::string pivot_log;  // one "iter,row,col,dual step,primal step,flips" line per pivot
  std::vector<std::string> warnings;
  std::vector<double> row_weights;  // maintained row weights at exit, by row
  double max_primal_infeas = 0.0;   // basic-variable bound violation at exit
  double max_dual_infeas = 0.0;     // reduced-cost violation (working costs)
  PamiAudit pami_audit;

  double ftran_hyper_pct() const {
    return counts.ftran ? 100.0 * counts.ftran_hyper / counts.ftran : 0.0;
  }
  double btran_hyper_pct() const {
    return counts.btran ? 100.0 * counts.btran_hyper / counts.btran : 0.0;
  }
};

// Bounded shortlist of infeasible rows ranked by attractiveness, with an
// admission floor that preserves an exact-argmax guarantee:
//
//   invariant: every row whose current measure is >= floor() is listed.
//
// A full rebuild() establishes the invariant (floor is the smallest listed
// measure, or 0 when everything fit, with floor ties always included);
// notify() must be called for every measure change; an insertion that
// overflows capacity evicts the smallest entry and raises the floor to it.
// best() is then the true argmax whenever it is >= floor(); otherwise the
// caller rebuilds. Ties resolve to the lowest row.
class CandidateHeap {
 public:
  void reset(int capacity, int m) {
    cap_ = capacity < 1 ? 1 : capacity;
    slot_.assign(m, -1);
    rows_.clear();
    alphas_.clear();
    floor_ = 0.0;
  }

  double floor() const { return floor_; }
  int size() const { return static_cast<int>(rows_.size()); }

  template <class AlphaFn>
  void rebuild(int m, AlphaFn alpha) {
    for (int r : rows_) slot_[r] = -1;
    rows_.clear();
    alphas_.clear();
    floor_ = 0.0;
    scratch_.clear();
    for (int i = 0; i < m; ++i) {
      const double a = alpha(i);
      if (a > 0.0) scratch_.push_back({a, i});
    }
    if (static_cast<int>(scratch_.size()) > cap_) {
      std::sort(scratch_.begin(), scratch_.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
      });
      const double cut = scratch_[cap_ - 1].first;
      size_t end = cap_;
      while (end < scratch_.size() && scratch_[end].first == cut) ++end;  // keep floor ties
      scratch_.resize(end);
      floor_ = cut;
    }
    for (auto& e : scratch_) insert(e.second, e.first);
  }

  void notify(int row, double a) {
    const int s = slot_[row];
    if (a <= 0.0) {
      if (s >= 0) remove_at(s);
      return;
    }
    if (s >= 0) {
      alphas_[s] = a;
      return;
    }
    if (a < floor_) return;
    insert(row, a);
    if (static_cast<int>(rows_.size()) > cap_) {
      // Evict the smallest measure; among equals the highest row, so low rows
      // (the tie winners) persist.
      int at = 0;
      for (int t = 1; t < static_cast<int>(rows_.size()); ++t)
        if (alphas_[t] < alphas_[at] || (alphas_[t] == alphas_[at] && rows_[t] > rows_[at]))
          at = t;
      floor_ = std::max(floor_, alphas_[at]);
      remove_at(at);
    }
  }

  struct Best {
    int row = -1;
    double alpha = 0.0;
  };

  Best best() const {
    Best b;
    for (int t = 0; t < static_cast<int>(rows_.size()); ++t)
      if (alphas_[t] > b.alpha || (alphas_[t] == b.alpha && b.row >= 0 && rows_[t] < b.row)) {
        b.row = rows_[t];
        b.alpha = alphas_[t];
      }
    return b;
  }

  // True when best() is certified to be the global argmax.
  bool trusted(const Best& b) const { return b.row >= 0 && b.alpha >= floor_; }

 private:
  void insert(int row, double a) {
    slot_[row] = static_cast<int>(rows_.size());
    rows_.push_back(row);
    alphas_.push_back(a);
  }
  void remove_at(int t) {
    const int last = static_cast<int>(rows_.size()) - 1;
    slot_[rows_[t]] = -1;
    if (t != last) {
      rows_[t] = rows_[last];
      alphas_[t] = alphas_[last];
      slot_[rows_[t]] = t;
    }
    rows_.pop_back();
    alphas_.pop_back();
  }

  int cap_ = 32;
  double floor_ = 0.0;
  std::vector<int> rows_;
  std::vector<double> alphas_;
  std::vector<int> slot_;
  std::vector<std::pair<double, int>> scratch_;
};

// The pivotal row in parts: fixed structural column blocks (each an ascending
// (column, value) list) plus the logical part, which is read directly off the
// backward-solve row since every logical column is a unit column.
struct PivotalRow {
  std::vector<std::vector<int>> bidx;
  std::vector<std::vector<double>> bval;
  void reset(int blocks) {
    bidx.assign(blocks, {});
    bval.assign(blocks, {});
  }
};

// Candidates of the ratio test, sign-adjusted so that every eligible column
// has working-row magnitude `a > 0` and would enter at ratio `max(0, d) / a`.
struct RatioCandidates {
  std::vector<int> col;
  std::vector<double> a;    // |sign-adjusted pivotal row value|
  std::vector<double> d;    // sign-adjusted reduced cost (feasible side >= 0)
  std::vector<double> raw;  // pivotal row value as computed
  void clear() {
    col.clear();
    a.clear();
    d.clear();
    raw.clear();
  }
  int size() const { return static_cast<int>(col.size()); }
};

struct Chuzc2Result {
  int q = -1;            // entering column, -1 when the dual is unbounded
  double theta = 0.0;    // nonnegative dual step magnitude
  double a_raw = 0.0;    // entering column's pivotal row value as computed
  double remaining = 0;  // infeasibility magnitude left for the entering column
  std::vector<int> flips;  // bound-flipping columns, ratio order
  bool unbounded = false;
};

// Shared state and per-iteration operations of the dual simplex engines.
// The three engines drive these kernels with different schedules.
class EngineContext {
 public:
  static constexpr int kSpmvBlocks = 16;
  static constexpr double kArtificialSpan = 1e7;
  static constexpr double kMinWeight = 1e-4;
  static constexpr double kDegenerateStep = 1e-12;
  static constexpr int kDegenerateLimit = 1000;
  static constexpr double kPerturbScale = 1e-9;
  static constexpr double kPivotAgreeTol = 1e-8;

  const CompLp& lp;
  SolveOptions opts;
  Tolerances tol;

  Basis basis;
  FactorEngine factor;
  InvertStats last_invert;

  std::vector<double> work_cost;   // possibly perturbed internal costs
  std::vector<double> work_lower;  // bounds, possibly artificially tightened
  std::vector<double> work_upper;
  std::vector<char> artificial;    // bit 1: lower is artificial, bit 2: upper is
  std::vector<double> work_value;  // resting value of each nonbasic column
  std::vector<double> dual;        // reduced costs (basic entries zero)
  std::vector<double> x_basic;     // basic values by position
  std::vector<double> weight;      // pricing weights by position
  std::vector<double> y_row;       // row duals of the last dual recompute

  CandidateHeap heap;
  ComponentClock clock;
  OpCounters counts;
  SolveWorkspace ws;  // serial-path scratch
  std::mt19937 rng;

  long long iterations = 0;
  int inverts = 0;
  bool perturbed = false;
  int degenerate_run = 0;
  std::vector<std::pair<int, int>> pivots;
  std::string pivot_log;
  std::vector<std::string> warnings;

  EngineContext(const CompLp& model, const SolveOptions& options)
      : lp(model), opts(options), tol(options.tol), rng(options.seed) {
    factor.opts = opts.factor;
    factor.opts.zero_drop = tol.zero_drop;
    factor.opts.pivot_abs_tol = tol.pivot;
    const int n = lp.num_col, m = lp.num_row;
    work_cost = lp.cost;
    work_lower = lp.lower;
    work_upper = lp.upper;
    artificial.assign(n, 0);
    work_value.assign(n, 0.0);
    dual.assign(n, 0.0);
    x_basic.assign(m, 0.0);
    weight.assign(m, 1.0);
    y_row.assign(m, 0.0);
    heap.reset(opts.candidate_list, m);
  }

  // ------------------------------------------------------------- start-up

  // All-logical starting basis: B = I, every structural nonbasic at the bound
  // its cost prefers, reduced costs equal to the costs, unit weights. Columns
  // that cannot be made dual feasible against an infinite bound get an
  // artificial working bound to rest on (relaxed again at the end).
  void initial_basis() {
    const int n = lp.num_col, m = lp.num_row;
    basis.basic.resize(m);
    basis.status.assign(n, VarStatus::kAtLower);
    for (int i = 0; i < m; ++i) {
      basis.basic[i] = lp.logical(i);
      basis.status[lp.logical(i)] = VarStatus::kBasic;
    }
    for (int j = 0; j < lp.num_struct(); ++j) {
      const double lo = work_lower[j], up = work_upper[j];
      if (lo == up)
        basis.status[j] = VarStatus::kFixed;
      else if (lo == -kInf && up == kInf)
        basis.status[j] = VarStatus::kFree;
      else if (lo == -kInf)
        basis.status[j] = VarStatus::kAtUpper;
      else if (up == kInf)
        basis.status[j] = VarStatus::kAtLower;
      else
        basis.status[j] = work_cost[j] >= 0.0 ? VarStatus::kAtLower : VarStatus::kAtUpper;
    }
    basis.rebuild_positions();
    for (int j = 0; j < n; ++j) {
      dual[j] = basis.status[j] == VarStatus::kBasic ? 0.0 : work_cost[j];
      if (basis.status[j] != VarStatus::kBasic) work_value[j] = resting_value(j);
    }
    apply_artificial_bounds();
    weight.assign(m, 1.0);
  }

  double resting_value(int j) const {
    switch (basis.status[j]) {
      case VarStatus::kAtLower:
      case VarStatus::kFixed:
        return work_lower[j];
      case VarStatus::kAtUpper:
        return work_upper[j];
      case VarStatus::kFree:
        return 0.0;
      case VarStatus::kBasic:
        break;
    }
    assert(false && "basic column has no resting value");
    return 0.0;
  }

  // Gives dual-infeasible nonbasic columns a finite bound to rest on when the
  // side they need is infinite.
  void apply_artificial_bounds() {
    for (int j = 0; j < lp.num_col; ++j) {
      const VarStatus s = basis.status[j];
      if (s == VarStatus::kBasic || s == VarStatus::kFixed) continue;
      const double d = dual[j];
      if (is_dual_feasible(s, d, tol.dual)) continue;
      if (s == VarStatus::kFree) {
        work_lower[j] = -kArtificialSpan;
        work_upper[j] = kArtificialSpan;
        artificial[j] = 3;
        basis.status[j] = d > 0.0 ? VarStatus::kAtLower : VarStatus::kAtUpper;
      } else if (s == VarStatus::kAtLower && d < -tol.dual) {
        if (work_upper[j] == kInf) {
          work_upper[j] = work_lower[j] + kArtificialSpan;
          artificial[j] |= 2;
        }
        basis.status[j] = VarStatus::kAtUpper;
      } else if (s == VarStatus::kAtUpper && d > tol.dual) {
        if (work_lower[j] == -kInf) {
          work_lower[j] = work_upper[j] - kArtificialSpan;
          artificial[j] |= 1;
        }
        basis.status[j] = VarStatus::kAtLower;
      }
      work_value[j] = resting_value(j);
    }
  }

  // Restores original bounds where the artificial ones are not load-bearing;
  // warns about any still-active artificial resting point.
  void relax_artificial_bounds() {
    bool active = false;
    for (int j = 0; j < lp.num_col; ++j) {
      if (!artificial[j]) continue;
      const VarStatus s = basis.status[j];
      const bool resting_low = s == VarStatus::kAtLower && (artificial[j] & 1);
      const bool resting_up = s == VarStatus::kAtUpper && (artificial[j] & 2);
      if (resting_low || resting_up) {
        active = true;
        continue;
      }
      if (artificial[j] & 1) work_lower[j] = lp.lower[j];
      if (artificial[j] & 2) work_upper[j] = lp.upper[j];
      artificial[j] = 0;
    }
    if (active)
      warnings.push_back(
          "a nonbasic column rests on an artificial bound; the model may be unbounded");
  }

  // --------------------------------------------------------------- refresh

  // Factorizes the current basis (repairing singularity with logicals), then
  // recomputes duals, repairs reduced-cost signs by bound flips, recomputes
  // primal values, and rebuilds the row shortlist.
  void full_refresh() {
    {
      ScopedTimer t(clock, Comp::kInvert);
      for (;;) {
        try {
          last_invert = factor.invert(lp, basis.basic);
          break;
        } catch (const SingularBasis& e) {
          repair_singular(e.row, e.position);
        }
      }
      ++inverts;
      const auto& prow = factor.row_of_step();
      const auto& pcol = factor.old_position_of_step();
      perm_scratch_i_ = basis.basic;
      perm_scratch_d_ = weight;
      for (int k = 0; k < lp.num_row; ++k) {
        basis.basic[prow[k]] = perm_scratch_i_[pcol[k]];
        weight[prow[k]] = perm_scratch_d_[pcol[k]];
      }
      basis.rebuild_positions();
      recompute_duals();
      flip_dual_infeasible();
      recompute_primal();
    }
    ScopedTimer t(clock, Comp::kChuzr);
    rebuild_heap();
  }

  void repair_singular(int row, int position) {
    const int displaced = basis.basic[position];
    const int logical = lp.logical(row);
    assert(basis.status[logical] == VarStatus::kBasic && basis.position_of[logical] < 0
               ? false
               : true);
    basis.basic[position] = logical;
    basis.status[logical] = VarStatus::kBasic;
    basis.status[displaced] = default_nonbasic_status(displaced);
    work_value[displaced] = resting_value(displaced);
    dual[displaced] = 0.0;  // refreshed by the dual recompute that follows
    warnings.push_back("singular basis: row " + std::to_string(row) +
                       " repaired with its logical column");
  }

  VarStatus default_nonbasic_status(int j) const {
    if (work_lower[j] == work_upper[j]) return VarStatus::kFixed;
    if (work_lower[j] != -kInf) return VarStatus::kAtLower;
    if (work_upper[j] != kInf) return VarStatus::kAtUpper;
    return VarStatus::kFree;
  }

  // x_B = B^{-1} (0 - sum of nonbasic columns at their resting values).
  void recompute_primal() {
    SparseVector rhs(lp.num_row);
    for (int j = 0; j < lp.num_col; ++j) {
      if (basis.status[j] == VarStatus::kBasic) continue;
      const double v = work_value[j];
      if (v == 0.0) continue;
      for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
        rhs.add(lp.col_index[k], -lp.col_value[k] * v);
    }
    rhs.prune(tol.zero_drop);
    factor.ftran(rhs, ws);
    std::fill(x_basic.begin(), x_basic.end(), 0.0);
    for (int i : rhs.indices()) x_basic[i] = rhs.value(i);
  }

  // y = B^{-T} c_B, then d_j = c_j - y' a_j for every nonbasic column.
  void recompute_duals() {
    SparseVector y(lp.num_row);
    for (int i = 0; i < lp.num_row; ++i) {
      const double cb = work_cost[basis.basic[i]];
      if (cb != 0.0) y.set(i, cb);
    }
    factor.btran(y, ws);
    std::fill(y_row.begin(), y_row.end(), 0.0);
    for (int i : y.indices()) y_row[i] = y.value(i);
    for (int j = 0; j < lp.num_col; ++j) {
      if (basis.status[j] == VarStatus::kBasic) {
        dual[j] = 0.0;
        continue;
      }
      double d = work_cost[j];
      for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
        d -= lp.col_value[k] * y_row[lp.col_index[k]];
      dual[j] = d;
    }
  }

  // Restores reduced-cost signs by flipping boxed nonbasic columns whose dual
  // value drifted to the wrong side.
  void flip_dual_infeasible() {
    for (int j = 0; j < lp.num_col; ++j) {
      const VarStatus s = basis.status[j];
      if (s == VarStatus::kAtLower && dual[j] < -tol.dual && work_upper[j] != kInf) {
        basis.status[j] = VarStatus::kAtUpper;
        work_value[j] = work_upper[j];
      } else if (s == VarStatus::kAtUpper && dual[j] > tol.dual && work_lower[j] != -kInf) {
        basis.status[j] = VarStatus::kAtLower;
        work_value[j] = work_lower[j];
      }
    }
  }

  // ------------------------------------------------------------ row choice

  // Attractiveness measure of basis position i: squared bound violation over
  // the pricing weight, zero when feasible within tolerance.
  double row_alpha(int i) const {
    const int j = basis.basic[i];
    const double infeas = primal_infeasibility(x_basic[i], work_lower[j], work_upper[j]);
    if (infeas <= tol.primal) return 0.0;
    return attractiveness(i, infeas * infeas, weight[i]);
  }

  void rebuild_heap() {
    try {
      heap.rebuild(lp.num_row, [this](int i) { return row_alpha(i); });
    } catch (const NonPositiveWeight&) {
      recompute_all_weights();
      heap.rebuild(lp.num_row, [this](int i) { return row_alpha(i); });
    }
  }

  // Picks the most attractive infeasible row, or -1 when none is left.
  int chuzr(double* alpha_out = nullptr) {
    ScopedTimer t(clock, Comp::kChuzr);
    CandidateHeap::Best b;
    try {
      b = heap.best();
      if (!heap.trusted(b)) {
        rebuild_heap();
        b = heap.best();
      }
    } catch (const NonPositiveWeight&) {
      recompute_all_weights();
      rebuild_heap();
      b = heap.best();
    }
    if (alpha_out != nullptr) *alpha_out = b.alpha;
    return b.row;
  }

  // Signed bound violation of position p: negative when below, positive above.
  double signed_infeasibility(int p) const {
    const int j = basis.basic[p];
    const double x = x_basic[p];
    if (x < work_lower[j]) return x - work_lower[j];
    if (x > work_upper[j]) return x - work_upper[j];
    return 0.0;
  }

  // ----------------------------------------------------------- row solves

  // Unit backward solve of row p. `partial` (optional) receives the upper-
  // stage partial needed by the factor update.
  void btran_row(int p, SparseVector& ep, SparseVector* partial, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kBtran);
    ep.setup(lp.num_row);
    ep.set(p, 1.0);
    factor.btran(ep, wc.ws, partial);
    ++wc.counts.btran;
    if (is_hyper_sparse_result(ep.count(), lp.num_row)) ++wc.counts.btran_hyper;
  }

  // One structural block of the pivotal row: values of row' * A for the
  // nonbasic structural columns of block b, ascending. Every value is a
  // column-entry-ordered dot product, so results do not depend on whether the
  // candidate columns were found by the row screen or the full scan.
  void spmv_block(const SparseVector& ep, int b, PivotalRow& row, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kSpmv);
    const int ns = lp.num_struct();
    const int base = ns / kSpmvBlocks, extra = ns % kSpmvBlocks;
    const int begin = b * base + std::min(b, extra);
    const int end = begin + base + (b < extra ? 1 : 0);
    auto& idx = row.bidx[b];
    auto& val = row.bval[b];
    idx.clear();
    val.clear();
    auto emit = [&](int j) {
      if (basis.status[j] == VarStatus::kBasic) return;
      double s = 0.0;
      for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
        s += lp.col_value[k] * ep.value(lp.col_index[k]);
      if (s != 0.0) {
        idx.push_back(j);
        val.push_back(s);
      }
    };
    if (is_hyper_sparse_result(ep.count(), lp.num_row)) {
      // Row screen: only columns meeting the row support can have nonzeros.
      // Uses the worker's own scratch because blocks of one row are priced
      // concurrently by different workers.
      auto& screen = wc.screen;
      screen.clear();
      for (int i : ep.indices())
        for (int k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
          const int j = lp.row_index[k];
          if (j >= begin && j < end) screen.push_back(j);
        }
      std::sort(screen.begin(), screen.end());
      screen.erase(std::unique(screen.begin(), screen.end()), screen.end());
      for (int j : screen) emit(j);
    } else {
      for (int j = begin; j < end; ++j) emit(j);
    }
  }

  void spmv_all(const SparseVector& ep, PivotalRow& row, WorkerCtx& wc) {
    row.reset(kSpmvBlocks);
    for (int b = 0; b < kSpmvBlocks; ++b) spmv_block(ep, b, row, wc);
  }

  // ------------------------------------------------------------ ratio test

  // Collects sign-adjusted ratio-test candidates from the logical part (read
  // directly off the backward-solve row) and the structural blocks.
  // `delta_sign` is the sign of the leaving row's bound violation.
  void chuzc1(const SparseVector& ep, const PivotalRow& row, int delta_sign,
              RatioCandidates& out, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kChuzc1);
    out.clear();
    for (int i : ep.indices()) chuzc1_candidate(lp.logical(i), ep.value(i), delta_sign, out);
    for (size_t b = 0; b < row.bidx.size(); ++b)
      for (size_t t2 = 0; t2 < row.bidx[b].size(); ++t2)
        chuzc1_candidate(row.bidx[b][t2], row.bval[b][t2], delta_sign, out);
  }

  // Appends column j with pivotal row value `a_raw` if eligible. The working
  // value is sign-adjusted by the leaving row's violation side so an entering
  // step always pushes the leaving value back toward its bound.
  void chuzc1_candidate(int j, double a_raw, int delta_sign, RatioCandidates& out) const {
    const double abar = delta_sign * a_raw;
    switch (basis.status[j]) {
      case VarStatus::kBasic:
      case VarStatus::kFixed:
        return;
      case VarStatus::kAtLower:
        if (abar > tol.pivot) out_push(out, j, abar, dual[j], a_raw);
        return;
      case VarStatus::kAtUpper:
        if (abar < -tol.pivot) out_push(out, j, -abar, -dual[j], a_raw);
        return;
      case VarStatus::kFree:
        if (abar > tol.pivot)
          out_push(out, j, abar, dual[j], a_raw);
        else if (abar < -tol.pivot)
          out_push(out, j, -abar, -dual[j], a_raw);
        return;
    }
  }

  static void out_push(RatioCandidates& out, int j, double a, double d, double raw) {
    out.col.push_back(j);
    out.a.push_back(a);
    out.d.push_back(d);
    out.raw.push_back(raw);
  }

  // Bound-flipping ratio test with a two-pass relaxed final selection.
  // `delta_abs` is the magnitude of the leaving row's violation. Candidates
  // are flipped in ratio order while the violation they absorb keeps the
  // residual positive; the entering column is then picked from the remaining
  // window by largest row value among those within the relaxed best ratio.
  void chuzc2(RatioCandidates& cands, double delta_abs, Chuzc2Result& out, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kChuzc2);
    out = Chuzc2Result{};
    const int nc = cands.size();
    if (nc == 0) {
      out.unbounded = true;
      out.remaining = delta_abs;
      return;
    }
    order_.resize(nc);
    for (int t2 = 0; t2 < nc; ++t2) order_[t2] = t2;
    ratio_.resize(nc);
    for (int t2 = 0; t2 < nc; ++t2) ratio_[t2] = std::max(0.0, cands.d[t2]) / cands.a[t2];
    std::sort(order_.begin(), order_.end(), [&](int x, int y) {
      return ratio_[x] != ratio_[y] ? ratio_[x] < ratio_[y] : cands.col[x] < cands.col[y];
    });

    double remaining = delta_abs;
    int window = nc;
    for (int t2 = 0; t2 < nc; ++t2) {
      const int c = order_[t2];
      const int j = cands.col[c];
      const double range = work_upper[j] - work_lower[j];
      const double absorb = range == kInf ? kInf : cands.a[c] * range;
      if (absorb < remaining) {
        out.flips.push_back(j);
        remaining -= absorb;
        continue;
      }
      window = t2;
      break;
    }
    if (window == nc) {
      // Everything flipped and the row is still infeasible: dual ray.
      out.unbounded = true;
      out.remaining = remaining;
      out.flips.clear();
      return;
    }

    double relaxed_best = kInf;
    for (int t2 = window; t2 < nc; ++t2) {
      const int c = order_[t2];
      const double r = (cands.d[c] + tol.harris_relax) / cands.a[c];
      relaxed_best = std::min(relaxed_best, r);
    }
    if (relaxed_best < 0.0) relaxed_best = 0.0;
    int pick = -1;
    for (int t2 = window; t2 < nc; ++t2) {
      const int c = order_[t2];
      if (ratio_[c] > relaxed_best) continue;
      if (pick < 0 || cands.a[c] > cands.a[pick] ||
          (cands.a[c] == cands.a[pick] && cands.col[c] < cands.col[pick]))
        pick = c;
    }
    assert(pick >= 0 && "relaxed window cannot be empty");
    out.q = cands.col[pick];
    out.theta = ratio_[pick];
    out.a_raw = cands.raw[pick];
    out.remaining = remaining;
  }

  // -------------------------------------------------------- column solves

  // Forward solve of column q. `partial` (optional) receives the lower-stage
  // partial needed by the factor update.
  void ftran_column(int q, SparseVector& ahat, SparseVector* partial, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kFtran);
    ahat.setup(lp.num_row);
    for (int k = lp.col_start[q]; k < lp.col_start[q + 1]; ++k)
      ahat.set(lp.col_index[k], lp.col_value[k]);
    factor.ftran(ahat, wc.ws, partial);
    ++wc.counts.ftran;
    if (is_hyper_sparse_result(ahat.count(), lp.num_row)) ++wc.counts.ftran_hyper;
  }

  // Forward solve of the backward-solve row, for the weight update.
  void ftran_dse(const SparseVector& ep, SparseVector& tau, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kFtranDse);
    tau.copy_from(ep);
    factor.ftran(tau, wc.ws);
    ++wc.counts.ftran;
    if (is_hyper_sparse_result(tau.count(), lp.num_row)) ++wc.counts.ftran_hyper;
  }

  // Applies the bound flips (statuses and resting values) and accumulates the
  // flip direction sum(a_j * (new - old)) into `rhs`.
  void build_flip_rhs(const std::vector<int>& flips, SparseVector& rhs) {
    rhs.setup(lp.num_row);
    for (int j : flips) {
      const double old_v = work_value[j];
      if (basis.status[j] == VarStatus::kAtLower) {
        basis.status[j] = VarStatus::kAtUpper;
        work_value[j] = work_upper[j];
      } else {
        basis.status[j] = VarStatus::kAtLower;
        work_value[j] = work_lower[j];
      }
      const double dv = work_value[j] - old_v;
      if (dv == 0.0) continue;
      for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
        rhs.add(lp.col_index[k], lp.col_value[k] * dv);
    }
    rhs.prune(tol.zero_drop);
  }

  // Forward solve of the flip direction.
  void ftran_flip(SparseVector& rhs, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kFtranBfrt);
    factor.ftran(rhs, wc.ws);
    ++wc.counts.ftran;
    if (is_hyper_sparse_result(rhs.count(), lp.num_row)) ++wc.counts.ftran_hyper;
  }

  // --------------------------------------------------------------- updates

  // d_j -= theta_dual * (pivotal row)_j over all nonbasic columns; the
  // entering column's reduced cost becomes zero, the leaving column's the
  // negated dual step.
  void update_dual(int p, int q, int leaving, double theta_dual, const SparseVector& ep,
                   const PivotalRow& row, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kUpdateDual);
    if (theta_dual != 0.0) {
      for (int i : ep.indices()) {
        const int j = lp.logical(i);
        if (basis.status[j] == VarStatus::kBasic) continue;
        dual[j] -= theta_dual * ep.value(i);
      }
      for (size_t b = 0; b < row.bidx.size(); ++b)
        for (size_t t2 = 0; t2 < row.bidx[b].size(); ++t2) {
          const int j = row.bidx[b][t2];
          if (basis.status[j] == VarStatus::kBasic) continue;
          dual[j] -= theta_dual * row.bval[b][t2];
        }
    }
    dual[q] = 0.0;
    dual[leaving] = -theta_dual;
    (void)p;
  }

  // x_B -= theta_p * ahat_q, plus the flip correction; position p then takes
  // the entering variable's value. Touched rows re-rank in the shortlist.
  void update_primal(int p, double theta_p, const SparseVector& ahat_q,
                     const SparseVector* flip_dx, double entering_value, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kUpdatePrimal);
    for (int i : ahat_q.indices()) {
      if (i == p) continue;
      x_basic[i] -= theta_p * ahat_q.value(i);
      heap.notify(i, row_alpha(i));
    }
    if (flip_dx != nullptr) {
      for (int i : flip_dx->indices()) {
        if (i == p) continue;
        x_basic[i] -= flip_dx->value(i);
        heap.notify(i, row_alpha(i));
      }
    }
    x_basic[p] = entering_value;
  }

  // Pricing weight update from the entering column and the forward solve of
  // the backward-solve row, using the leaving row's pre-update weight.
  void update_weights(int p, const SparseVector& ahat_q, const SparseVector& tau, double w_p_old,
                      double a_pq, WorkerCtx& wc) {
    ScopedTimer t(wc.clock, Comp::kUpdateWeight);
    const double inv = 1.0 / a_pq;
    for (int i : ahat_q.indices()) {
      if (i == p) continue;
      const double r = ahat_q.value(i) * inv;
      double w = weight[i] - r * (2.0 * tau.value(i) - r * w_p_old);
      if (w < kMinWeight) w = kMinWeight;
      weight[i] = w;
      heap.notify(i, row_alpha(i));
    }
    double wp = w_p_old * inv * inv;
    if (wp < kMinWeight) wp = kMinWeight;
    weight[p] = wp;
    heap.notify(p, row_alpha(p));
  }

  // Exact weights: one backward solve per row. Used to recover from a
  // non-positive weight report.
  void recompute_all_weights() {
    ScopedTimer t(clock, Comp::kUpdateWeight);
    SparseVector e(lp.num_row);
    for (int i = 0; i < lp.num_row; ++i) {
      e.clear();
      e.set(i, 1.0);
      factor.btran(e, ws);
      double w = 0.0;
      for (int k : e.indices()) w += e.value(k) * e.value(k);
      weight[i] = w > kMinWeight ? w : kMinWeight;
    }
  }

  // Moves the entering column into position p and rests the leaving column on
  // the bound it violated (`to_upper`: above its upper bound).
  void update_basis(int p, int q, int leaving, bool to_upper) {
    basis.basic[p] = q;
    basis.status[q] = VarStatus::kBasic;
    basis.position_of[q] = p;
    basis.position_of[leaving] = -1;
    if (work_lower[leaving] == work_upper[leaving]) {
      basis.status[leaving] = VarStatus::kFixed;
      work_value[leaving] = work_lower[leaving];
    } else if (to_upper) {
      basis.status[leaving] = VarStatus::kAtUpper;
      work_value[leaving] = work_upper[leaving];
    } else {
      basis.status[leaving] = VarStatus::kAtLower;
      work_value[leaving] = work_lower[leaving];
    }
    heap.notify(p, row_alpha(p));
  }

  // ---------------------------------------------------- degeneracy control

  // Tracks dual step sizes; after a long run of degenerate steps the working
  // costs of nonbasic columns get a tiny feasibility-preserving perturbation.
  // Returns true when a perturbation was applied.
  bool note_step(double theta_dual) {
    if (std::abs(theta_dual) > kDegenerateStep) {
      degenerate_run = 0;
      return false;
    }
    if (++degenerate_run < kDegenerateLimit || perturbed) return false;
    perturb_costs();
    return true;
  }

  void perturb_costs() {
    perturbed = true;
    std::uniform_real_distribution<double> u(0.5, 1.0);
    for (int j = 0; j < lp.num_col; ++j) {
      const VarStatus s = basis.status[j];
      if (s == VarStatus::kBasic || s == VarStatus::kFixed) continue;
      const double eps = kPerturbScale * (1.0 + std::abs(work_cost[j])) * u(rng);
      double delta = 0.0;
      if (s == VarStatus::kAtLower)
        delta = eps;
      else if (s == VarStatus::kAtUpper)
        delta = -eps;
      work_cost[j] += delta;
      dual[j] += delta;
    }
    degenerate_run = 0;
    warnings.push_back("degenerate run: costs perturbed");
  }

  // Removes any cost perturbation and recomputes the duals from the original
  // costs. The perturbation never exceeds the dual tolerance, so feasibility
  // survives the removal.
  void remove_perturbation() {
    if (!perturbed) return;
    for (int j = 0; j < lp.num_col; ++j) work_cost[j] = lp.cost[j];
    recompute_duals();
    perturbed = false;
  }

  // ------------------------------------------------------------ bookkeeping

  // One basis change: iteration, leaving row, entering column, dual and
  // primal step lengths, and the number of bound flips that rode along.
  void record_pivot(int p, int q, double theta_dual, double theta_primal, int num_flips) {
    pivots.emplace_back(p, q);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%lld,%d,%d,%.17g,%.17g,%d\n", iterations, p, q, theta_dual,
                  theta_primal, num_flips);
    pivot_log += buf;
  }

  // Dot of a row-space vector with structural column j (entry order fixed).
  double col_dot(const SparseVector& y, int j) const {
    double s = 0.0;
    for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
      s += lp.col_value[k] * y.value(lp.col_index[k]);
    return s;
  }

  bool pivot_values_agree(double row_value, double col_value) const {
    const double scale = std::max(1.0, std::abs(col_value));
    return std::abs(row_value - col_value) <= kPivotAgreeTol * scale;
  }

  double max_primal_infeasibility() const {
    double worst = 0.0;
    for (int i = 0; i < lp.num_row; ++i) {
      const int j = basis.basic[i];
      worst = std::max(worst, primal_infeasibility(x_basic[i], work_lower[j], work_upper[j]));
    }
    return worst;
  }

  double max_dual_infeasibility() const {
    double worst = 0.0;
    for (int j = 0; j < lp.num_col; ++j) {
      const VarStatus s = basis.status[j];
      if (s == VarStatus::kBasic || s == VarStatus::kFixed) continue;
      const double d = dual[j];
      double viol = 0.0;
      if (s == VarStatus::kAtLower)
        viol = d < 0.0 ? -d : 0.0;
      else if (s == VarStatus::kAtUpper)
        viol = d > 0.0 ? d : 0.0;
      else
        viol = std::abs(d);
      worst = std::max(worst, viol);
    }
    return worst;
  }

  double internal_objective() const {
    double f = 0.0;
    for (int i = 0; i < lp.num_row; ++i) f += lp.cost[basis.basic[i]] * x_basic[i];
    for (int j = 0; j < lp.num_col; ++j)
      if (basis.status[j] != VarStatus::kBasic) f += lp.cost[j] * work_value[j];
    return f;
  }

  bool over_iteration_limit() const {
    return opts.iteration_limit >= 0 && iterations >= opts.iteration_limit;
  }

  // Packages the run. Engines finalize their own clocks before calling.
  Solution finish(SolveStatus st, double wall) {
    relax_artificial_bounds();
    Solution s;
    s.status = st;
    s.objective = external_objective(lp, internal_objective());
    s.col_value.assign(lp.num_col, 0.0);
    for (int j = 0; j < lp.num_col; ++j)
      s.col_value[j] =
          basis.status[j] == VarStatus::kBasic ? x_basic[basis.position_of[j]] : work_value[j];
    s.dual_row = y_row;
    s.dual_col = dual;
    s.basis = basis;
    s.iterations = iterations;
    s.inverts = inverts;
    s.wall_seconds = wall;
    clock.finalize(wall);
    s.clock = clock;
    s.counts = counts;
    s.pivots = pivots;
    s.pivot_log = std::move(pivot_log);
    s.warnings = warnings;
    s.row_weights = weight;
    s.max_primal_infeas = max_primal_infeasibility();
    s.max_dual_infeas = max_dual_infeasibility();
    return s;
  }

 private:
  std::vector<int> perm_scratch_i_;
  std::vector<double> perm_scratch_d_;
  std::vector<int> order_;
  std::vector<double> ratio_;
};

}  // namespace duplex
