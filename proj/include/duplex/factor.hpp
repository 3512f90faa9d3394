#pragma once

#include <algorithm>
#include <cassert>
#include <climits>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duplex/errors.hpp"
#include "duplex/lp.hpp"
#include "duplex/sparse_vector.hpp"

namespace duplex {

// A solve result whose density is strictly below this is counted hyper-sparse.
inline constexpr double kHyperSparseDensity = 0.10;

inline bool is_hyper_sparse_result(int count, int dim) {
  return dim > 0 && static_cast<double>(count) / dim < kHyperSparseDensity;
}

struct FactorOptions {
  double markowitz_threshold = 0.1;  // relative pivot admissibility within a column
  double pivot_abs_tol = 1e-9;       // hard floor on pivot magnitude
  double zero_drop = 1e-14;          // values below this are dropped
  double hyper_switch = 0.10;        // graph solve used when predicted density is below this
  int refactor_limit = 100;          // updates tolerated before solves demand a fresh invert
  double ft_growth_limit = 1e8;      // growth bound on update spikes/multipliers
  int search_columns = 8;            // pivot-search breadth in the elimination kernel

  enum class Route { kAuto, kSweep, kGraph };
  Route route = Route::kAuto;  // kAuto picks per stage; others force one path (tests)
};

struct InvertStats {
  int fill_in = 0;
  int l_entries = 0;
  int u_entries = 0;   // off-diagonal
  int singletons = 0;  // pivots placed by the singleton pre-pass
};

// Per-caller scratch for triangular solves. Each worker thread doing
// concurrent solves owns one of these. The mark array distinguishes, per
// stage, entries already on a vector's index list (== epoch) from untouched
// positions; graph solves additionally use epoch+1 (on DFS stack) and
// epoch+2 (ordered) as transient states.
struct SolveWorkspace {
  std::vector<int> mark;
  int epoch = 0;
  std::vector<int> stack;  // DFS node stack
  std::vector<int> edge;   // DFS edge cursor stack
  std::vector<int> order;  // reverse postorder accumulator

  void ensure(int m) {
    if (static_cast<int>(mark.size()) < m) {
      mark.assign(m, 0);
      epoch = 0;
    }
  }
  int new_epoch() {
    if (epoch > INT_MAX - 8) {
      std::fill(mark.begin(), mark.end(), 0);
      epoch = 0;
    }
    epoch += 4;
    return epoch;
  }
};

// One pivot of a collective factor update: the leaving row and the packed
// partial forward solve (lower stage only) of the entering column, both taken
// against the factorization the whole batch started from.
struct FtPivot {
  int row = -1;
  std::vector<int> spike_index;
  std::vector<double> spike_value;
};

// Sparse LU factorization of the basis matrix B with a product-form update
// log. Supports:
//   - invert():        Markowitz factorization with a singleton pre-pass
//   - ftran()/btran(): solves B x = b and B^T y = c, choosing per triangular
//     stage between a full sweep and a graph-driven (reachability) kernel
//     keyed on predicted result density
//   - append_pf():     product-form update from the updated entering column
//   - append_apf():    alternate product-form update applied outside B
//   - append_ft():     update of U in place plus one row elimination eta
//   - collective_ft(): a batch of such updates applied in one serial pass
//     from partials taken against the pre-batch factors
//
// Solves are const and safe to run concurrently from several threads, each
// with its own SolveWorkspace; mutations (invert/append) must be exclusive.
//
// After invert() the basis positions are implicitly relabeled so that the
// pivot of step k lives on row r_k both as row and as basis position; callers
// re-permute their position-indexed data via row_of_step() and
// old_position_of_step().
class FactorEngine {
 public:
  FactorOptions opts;

  int dim() const { return m_; }
  int update_count() const { return static_cast<int>(log_kind_.size()); }
  bool needs_refactor() const { return update_count() >= opts.refactor_limit; }

  const std::vector<int>& row_of_step() const { return pivot_row_; }
  const std::vector<int>& old_position_of_step() const { return pivot_pos_; }

  // ---------------------------------------------------------------- invert

  InvertStats invert(const CompLp& lp, const std::vector<int>& basic) {
    m_ = lp.num_row;
    assert(static_cast<int>(basic.size()) == m_);
    InvertStats stats;

    // Active submatrix, column-wise values plus exact row patterns.
    std::vector<std::vector<std::pair<int, double>>> mc(m_);
    std::vector<std::vector<int>> mr(m_);
    std::vector<int> col_count(m_, 0), row_count(m_, 0);
    std::vector<char> col_alive(m_, 1), row_alive(m_, 1);
    for (int pos = 0; pos < m_; ++pos) {
      const int j = basic[pos];
      for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k) {
        const double v = lp.col_value[k];
        if (std::abs(v) < opts.zero_drop) continue;
        const int i = lp.col_index[k];
        mc[pos].push_back({i, v});
        mr[i].push_back(pos);
      }
    }
    for (int pos = 0; pos < m_; ++pos) col_count[pos] = static_cast<int>(mc[pos].size());
    for (int i = 0; i < m_; ++i) row_count[i] = static_cast<int>(mr[i].size());

    pivot_row_.assign(m_, -1);
    pivot_pos_.assign(m_, -1);
    upiv_.assign(m_, 0.0);
    ucol_.assign(m_, {});
    std::vector<std::vector<std::pair<int, double>>> urow_raw(m_);
    std::vector<std::vector<std::pair<int, double>>> lcol(m_);

    // Count buckets over active columns and rows (doubly linked lists).
    std::vector<int> cnext(m_), cprev(m_), chead(m_ + 1, -1);
    std::vector<int> rnext(m_), rprev(m_), rhead(m_ + 1, -1);
    auto list_insert = [](std::vector<int>& head, std::vector<int>& nx, std::vector<int>& pv,
                          int count, int id) {
      nx[id] = head[count];
      pv[id] = -1;
      if (head[count] >= 0) pv[head[count]] = id;
      head[count] = id;
    };
    auto list_remove = [](std::vector<int>& head, std::vector<int>& nx, std::vector<int>& pv,
                          int count, int id) {
      if (pv[id] >= 0)
        nx[pv[id]] = nx[id];
      else
        head[count] = nx[id];
      if (nx[id] >= 0) pv[nx[id]] = pv[id];
    };
    for (int pos = 0; pos < m_; ++pos) list_insert(chead, cnext, cprev, col_count[pos], pos);
    for (int i = 0; i < m_; ++i) list_insert(rhead, rnext, rprev, row_count[i], i);
    auto col_recount = [&](int pos, int delta) {
      list_remove(chead, cnext, cprev, col_count[pos], pos);
      col_count[pos] += delta;
      list_insert(chead, cnext, cprev, col_count[pos], pos);
    };
    auto row_recount = [&](int i, int delta) {
      list_remove(rhead, rnext, rprev, row_count[i], i);
      row_count[i] += delta;
      list_insert(rhead, rnext, rprev, row_count[i], i);
    };

    std::vector<double> mult_val(m_, 0.0);
    std::vector<char> mult_flag(m_, 0);
    std::vector<std::pair<int, double>> multipliers;

    int steps_done = 0;
    auto erase_row_entry = [&](int i, int pos) {
      auto& v = mr[i];
      for (size_t t = 0; t < v.size(); ++t)
        if (v[t] == pos) {
          v[t] = v.back();
          v.pop_back();
          return;
        }
      assert(false && "row pattern entry missing");
    };

    // One elimination step on pivot (row r, basis position jpos).
    auto eliminate = [&](int r, int jpos, bool from_singleton) {
      const int k = steps_done;
      double pv = 0.0;
      for (auto& e : mc[jpos])
        if (e.first == r) pv = e.second;
      assert(pv != 0.0);

      pivot_row_[k] = r;
      pivot_pos_[k] = jpos;
      upiv_[k] = pv;
      if (from_singleton) ++stats.singletons;

      // Extract the pivot column: multipliers for L.
      multipliers.clear();
      list_remove(chead, cnext, cprev, col_count[jpos], jpos);
      col_alive[jpos] = 0;
      for (auto& e : mc[jpos]) {
        erase_row_entry(e.first, jpos);
        if (e.first != r) {
          multipliers.push_back({e.first, e.second / pv});
          row_recount(e.first, -1);
        }
      }
      mc[jpos].clear();
      mc[jpos].shrink_to_fit();

      // Extract the pivot row: entries of U, keyed by column position for now.
      list_remove(rhead, rnext, rprev, row_count[r], r);
      row_alive[r] = 0;
      auto& urow = urow_raw[k];
      for (int c : mr[r]) {
        auto& col = mc[c];
        for (size_t t = 0; t < col.size(); ++t)
          if (col[t].first == r) {
            urow.push_back({c, col[t].second});
            col[t] = col.back();
            col.pop_back();
            break;
          }
        col_recount(c, -1);
      }
      mr[r].clear();
      mr[r].shrink_to_fit();

      // Eliminate: active row i -= multiplier_i * pivot row.
      if (!multipliers.empty() && !urow.empty()) {
        for (auto& me : multipliers) {
          mult_flag[me.first] = 1;
          mult_val[me.first] = me.second;
        }
        for (auto& ue : urow) {
          const int c = ue.first;
          const double uv = ue.second;
          auto& col = mc[c];
          int removed = 0;
          for (size_t t = 0; t < col.size();) {
            auto& e = col[t];
            if (mult_flag[e.first] == 1) {
              e.second -= mult_val[e.first] * uv;
              mult_flag[e.first] = 2;  // present in this column
              if (std::abs(e.second) < opts.zero_drop) {
                erase_row_entry(e.first, c);
                row_recount(e.first, -1);
                col[t] = col.back();
                col.pop_back();
                ++removed;
                continue;
              }
            }
            ++t;
          }
          int filled = 0;
          for (auto& me : multipliers) {
            if (mult_flag[me.first] == 1) {  // absent: fill-in
              const double fv = -me.second * uv;
              if (std::abs(fv) >= opts.zero_drop) {
                col.push_back({me.first, fv});
                mr[me.first].push_back(c);
                row_recount(me.first, +1);
                ++filled;
                ++stats.fill_in;
              }
            } else {
              mult_flag[me.first] = 1;
            }
          }
          if (filled != removed) col_recount(c, filled - removed);
        }
        for (auto& me : multipliers) mult_flag[me.first] = 0;
      }
      lcol[k] = multipliers;
      stats.l_entries += static_cast<int>(multipliers.size());
      ++steps_done;
    };

    while (steps_done < m_) {
      // Singleton pre-pass: column singletons first, then row singletons.
      const int pos1 = chead[1];
      if (pos1 >= 0 && std::abs(mc[pos1][0].second) >= opts.pivot_abs_tol) {
        eliminate(mc[pos1][0].first, pos1, true);
        continue;
      }
      const int row1 = rhead[1];
      if (row1 >= 0) {
        const int jpos = mr[row1][0];
        double v = 0.0;
        for (auto& e : mc[jpos])
          if (e.first == row1) v = e.second;
        if (std::abs(v) >= opts.pivot_abs_tol) {
          eliminate(row1, jpos, true);
          continue;
        }
      }

      // Merit search over low-count columns, thresholded within each column.
      int best_row = -1, best_pos = -1;
      double best_merit = 0.0;
      bool have_best = false;
      int examined = 0;
      for (int count = 1; count <= m_; ++count) {
        if (have_best &&
            (examined >= opts.search_columns ||
             best_merit <= static_cast<double>(count - 1) * (count - 1)))
          break;
        for (int pos = chead[count]; pos >= 0; pos = cnext[pos]) {
          double cmax = 0.0;
          for (auto& e : mc[pos]) cmax = std::max(cmax, std::abs(e.second));
          if (cmax < opts.pivot_abs_tol) continue;  // numerically empty column
          for (auto& e : mc[pos]) {
            const double av = std::abs(e.second);
            if (av < opts.pivot_abs_tol || av < opts.markowitz_threshold * cmax) continue;
            const double merit = static_cast<double>(row_count[e.first] - 1) * (count - 1);
            if (!have_best || merit < best_merit ||
                (merit == best_merit &&
                 (e.first < best_row || (e.first == best_row && pos < best_pos)))) {
              have_best = true;
              best_merit = merit;
              best_row = e.first;
              best_pos = pos;
            }
          }
          ++examined;
          if (have_best && examined >= opts.search_columns) break;
        }
      }
      if (!have_best) {
        // No acceptable pivot anywhere: report one dependent row/position.
        int bad_row = -1, bad_pos = -1;
        for (int i = 0; i < m_ && bad_row < 0; ++i)
          if (row_alive[i]) bad_row = i;
        for (int pos = 0; pos < m_ && bad_pos < 0; ++pos)
          if (col_alive[pos]) bad_pos = pos;
        throw SingularBasis(bad_row, bad_pos);
      }
      eliminate(best_row, best_pos, false);
    }

    // Finalize step-keyed storage. Home row of a position = pivot row of its
    // step; U row entries are re-keyed from positions to home rows.
    step_of_row_.assign(m_, -1);
    for (int k = 0; k < m_; ++k) step_of_row_[pivot_row_[k]] = k;
    std::vector<int> home_of_pos(m_, -1);
    for (int k = 0; k < m_; ++k) home_of_pos[pivot_pos_[k]] = pivot_row_[k];

    urow_.assign(m_, {});
    for (int k = 0; k < m_; ++k) {
      urow_[k].reserve(urow_raw[k].size());
      for (auto& e : urow_raw[k]) urow_[k].push_back({home_of_pos[e.first], e.second});
      stats.u_entries += static_cast<int>(urow_[k].size());
    }
    for (int k = 0; k < m_; ++k)
      for (auto& e : urow_[k]) ucol_[step_of_row_[e.first]].push_back({pivot_row_[k], e.second});

    // Static L storage: column-wise flattened, plus a row-wise transpose for
    // the graph kernels.
    lc_start_.assign(m_ + 1, 0);
    for (int k = 0; k < m_; ++k)
      lc_start_[k + 1] = lc_start_[k] + static_cast<int>(lcol[k].size());
    lc_index_.resize(lc_start_[m_]);
    lc_value_.resize(lc_start_[m_]);
    for (int k = 0; k < m_; ++k)
      for (size_t t = 0; t < lcol[k].size(); ++t) {
        lc_index_[lc_start_[k] + static_cast<int>(t)] = lcol[k][t].first;
        lc_value_[lc_start_[k] + static_cast<int>(t)] = lcol[k][t].second;
      }
    lr_start_.assign(m_ + 2, 0);
    for (int t = 0; t < lc_start_[m_]; ++t) lr_start_[lc_index_[t] + 2]++;
    for (int i = 2; i <= m_ + 1; ++i) lr_start_[i] += lr_start_[i - 1];
    lr_target_.assign(lc_start_[m_], 0);
    lr_value_.assign(lc_start_[m_], 0.0);
    for (int k = 0; k < m_; ++k)
      for (int t = lc_start_[k]; t < lc_start_[k + 1]; ++t) {
        const int slot = lr_start_[lc_index_[t] + 1]++;
        lr_target_[slot] = pivot_row_[k];
        lr_value_[slot] = lc_value_[t];
      }
    lr_start_.pop_back();

    // Pivot order of U as a linked list over steps.
    next_.assign(m_, -1);
    prev_.assign(m_, -1);
    head_ = m_ > 0 ? 0 : -1;
    tail_ = m_ - 1;
    for (int k = 0; k < m_; ++k) {
      next_[k] = k + 1 < m_ ? k + 1 : -1;
      prev_[k] = k - 1;
    }

    pf_.clear();
    apf_.clear();
    r_.clear();
    log_kind_.clear();
    log_slot_.clear();
    scratch_.assign(m_, 0.0);
    return stats;
  }

  // ---------------------------------------------------------------- solves

  // Solves B x = b in place: on entry `v` holds b (row space), on exit the
  // basic components of the solution. If `partial` is nonnull it receives the
  // lower-stage partial result, which append_ft()/collective_ft() consume.
  void ftran(SparseVector& v, SolveWorkspace& ws, SparseVector* partial = nullptr) const {
    if (update_count() > opts.refactor_limit) throw StaleFactors();
    ws.ensure(m_);
    walk_apf_ftran(v, ws);
    solve_lower(v, ws);
    walk_r_ftran(v, ws);
    if (partial != nullptr) {
      v.prune(opts.zero_drop);
      partial->copy_from(v);
    }
    solve_upper(v, ws);
    walk_pf_ftran(v, ws);
    v.prune(opts.zero_drop);
  }

  // Solves B^T y = c in place: on entry `v` holds c (position space), on exit
  // the row-space solution. `partial` receives the upper-stage partial (the
  // unit solve against U of the leaving row) for use by append_ft().
  void btran(SparseVector& v, SolveWorkspace& ws, SparseVector* partial = nullptr) const {
    if (update_count() > opts.refactor_limit) throw StaleFactors();
    ws.ensure(m_);
    walk_pf_btran(v, ws);
    solve_upper_transpose(v, ws);
    if (partial != nullptr) {
      v.prune(opts.zero_drop);
      partial->copy_from(v);
    }
    walk_r_btran(v, ws);
    solve_lower_transpose(v, ws);
    walk_apf_btran(v, ws);
    v.prune(opts.zero_drop);
  }

  // ---------------------------------------------------------------- updates

  // Product-form update: the entering column's full forward solve `ahat_q`
  // replaces basis position p.
  void append_pf(const SparseVector& ahat_q, int p) {
    const double pivot = ahat_q.value(p);
    if (std::abs(pivot) < opts.pivot_abs_tol) throw TinyPivot(pivot);
    PfEta eta;
    eta.p = p;
    eta.pivot = pivot;
    for (int i : ahat_q.indices())
      if (i != p && std::abs(ahat_q.value(i)) >= opts.zero_drop)
        eta.col.push_back({i, ahat_q.value(i)});
    pf_.push_back(std::move(eta));
    push_log(kPf, static_cast<int>(pf_.size()) - 1);
  }

  // Alternate product-form update, applied outside B. Needs the updated
  // pivotal row `ehat_p` (full backward solve of the leaving position's unit
  // vector) plus the entering and leaving constraint columns of the LP.
  void append_apf(const SparseVector& ehat_p, const CompLp& lp, int entering_col,
                  int leaving_col) {
    ApfEta eta;
    double mu = 1.0;
    for (int k = lp.col_start[entering_col]; k < lp.col_start[entering_col + 1]; ++k) {
      eta.dcol.push_back({lp.col_index[k], lp.col_value[k]});
      mu += ehat_p.value(lp.col_index[k]) * lp.col_value[k];
    }
    for (int k = lp.col_start[leaving_col]; k < lp.col_start[leaving_col + 1]; ++k) {
      eta.dcol.push_back({lp.col_index[k], -lp.col_value[k]});
      mu -= ehat_p.value(lp.col_index[k]) * lp.col_value[k];
    }
    if (std::abs(mu) < opts.pivot_abs_tol) throw TinyPivot(mu);
    eta.mu = mu;
    for (int i : ehat_p.indices())
      if (std::abs(ehat_p.value(i)) >= opts.zero_drop) eta.row.push_back({i, ehat_p.value(i)});
    apf_.push_back(std::move(eta));
    push_log(kApf, static_cast<int>(apf_.size()) - 1);
  }

  // Factor update in place for leaving row p: installs the entering column's
  // lower-stage partial (`spike`) as the new U column of p, eliminates the
  // displaced row with multipliers taken from the leaving row's upper-stage
  // partial (`row_partial`), and appends that elimination as one row eta.
  // Requires an update log free of product-form entries.
  void append_ft(int p, const SparseVector& spike, const SparseVector& row_partial) {
    assert(pf_.empty() && apf_.empty() && "factor updates cannot follow product-form updates");
    pack_pair(spike, tmp_idx_a_, tmp_val_a_);
    pack_pair(row_partial, tmp_idx_b_, tmp_val_b_);
    ft_surgery(p, tmp_idx_a_, tmp_val_a_, tmp_idx_b_, tmp_val_b_);
  }

  void append_ft(int p, std::span<const int> spike_index, std::span<const double> spike_value,
                 std::span<const int> row_index, std::span<const double> row_value) {
    assert(pf_.empty() && apf_.empty() && "factor updates cannot follow product-form updates");
    ft_surgery(p, spike_index, spike_value, row_index, row_value);
  }

  // Applies t factor updates in one serial pass. Each pivot carries the
  // partial forward solve of its entering column taken against the factors as
  // of the start of the batch; the pass replays them through the row etas it
  // appends itself and solves each leaving row against the current U. Any
  // rejection is surfaced as FtFailure (caller refactorizes).
  void collective_ft(std::span<FtPivot> pivots, SolveWorkspace& ws) {
    assert(pf_.empty() && apf_.empty() && "factor updates cannot follow product-form updates");
    const size_t r_base = r_.size();
    SparseVector spike(m_), row(m_);
    for (FtPivot& pv : pivots) {
      spike.clear();
      spike.load(pv.spike_index, pv.spike_value);
      if (r_.size() > r_base) {
        const int epoch = stage_begin(spike, ws);
        for (size_t e = r_base; e < r_.size(); ++e) apply_r_ftran(r_[e], spike, ws, epoch);
      }
      spike.prune(opts.zero_drop);

      row.clear();
      row.set(pv.row, 1.0);
      solve_upper_transpose(row, ws);
      row.prune(opts.zero_drop);

      pack_pair(spike, tmp_idx_a_, tmp_val_a_);
      pack_pair(row, tmp_idx_b_, tmp_val_b_);
      try {
        ft_surgery(pv.row, tmp_idx_a_, tmp_val_a_, tmp_idx_b_, tmp_val_b_);
      } catch (const TinyPivot& e) {
        throw FtFailure(std::string("collective update pivot rejected: ") + e.what());
      }
    }
  }

 private:
  enum LogKind : int { kPf = 0, kApf = 1, kR = 2 };

  struct PfEta {
    int p;
    double pivot;
    std::vector<std::pair<int, double>> col;  // excludes p
  };
  struct ApfEta {
    double mu;
    std::vector<std::pair<int, double>> row;   // pivotal row entries
    std::vector<std::pair<int, double>> dcol;  // entering minus leaving column
  };
  struct REta {
    int target;
    std::vector<std::pair<int, double>> terms;  // x[target] -= sum terms * x[i]
  };

  void push_log(LogKind kind, int slot) {
    log_kind_.push_back(kind);
    log_slot_.push_back(slot);
  }

  static void pack_pair(const SparseVector& v, std::vector<int>& idx, std::vector<double>& val) {
    idx.clear();
    val.clear();
    idx.reserve(v.count());
    val.reserve(v.count());
    for (int i : v.indices()) {
      idx.push_back(i);
      val.push_back(v.value(i));
    }
  }

  void ft_surgery(int p, std::span<const int> sp_idx, std::span<const double> sp_val,
                  std::span<const int> rw_idx, std::span<const double> rw_val) {
    const int k = step_of_row_[p];
    const double old_piv = upiv_[k];

    // New pivot and growth screen; scratch_ holds the spike densely.
    double growth = 0.0;
    for (size_t t = 0; t < sp_idx.size(); ++t) {
      scratch_[sp_idx[t]] = sp_val[t];
      growth = std::max(growth, std::abs(sp_val[t]));
    }
    double new_piv = scratch_[p];
    REta eta;
    eta.target = p;
    for (size_t t = 0; t < rw_idx.size(); ++t) {
      const int r = rw_idx[t];
      if (r == p) continue;
      const double lambda = -old_piv * rw_val[t];
      if (std::abs(lambda) < opts.zero_drop) continue;
      eta.terms.push_back({r, lambda});
      new_piv -= lambda * scratch_[r];
      growth = std::max(growth, std::abs(lambda));
    }
    growth = std::max(growth, std::abs(new_piv));
    if (growth > opts.ft_growth_limit) {
      for (int i : sp_idx) scratch_[i] = 0.0;
      throw FtFailure("update growth " + std::to_string(growth));
    }
    if (std::abs(new_piv) < opts.pivot_abs_tol) {
      for (int i : sp_idx) scratch_[i] = 0.0;
      throw TinyPivot(new_piv);
    }

    // Drop the old column of p from the row lists and the old row of p from
    // the column lists.
    for (auto& e : ucol_[k]) {
      auto& rr = urow_[step_of_row_[e.first]];
      for (size_t t = 0; t < rr.size(); ++t)
        if (rr[t].first == p) {
          rr[t] = rr.back();
          rr.pop_back();
          break;
        }
    }
    for (auto& e : urow_[k]) {
      auto& cc = ucol_[step_of_row_[e.first]];
      for (size_t t = 0; t < cc.size(); ++t)
        if (cc[t].first == p) {
          cc[t] = cc.back();
          cc.pop_back();
          break;
        }
    }
    ucol_[k].clear();
    urow_[k].clear();

    // Install the spike as the new, last-ordered column of p.
    for (size_t t = 0; t < sp_idx.size(); ++t) {
      const int i = sp_idx[t];
      const double v = scratch_[i];
      scratch_[i] = 0.0;
      if (i == p || std::abs(v) < opts.zero_drop) continue;
      ucol_[k].push_back({i, v});
      urow_[step_of_row_[i]].push_back({p, v});
    }
    upiv_[k] = new_piv;

    // Move step k to the tail of the pivot order.
    if (tail_ != k) {
      if (prev_[k] >= 0)
        next_[prev_[k]] = next_[k];
      else
        head_ = next_[k];
      if (next_[k] >= 0) prev_[next_[k]] = prev_[k];
      prev_[k] = tail_;
      next_[tail_] = k;
      next_[k] = -1;
      tail_ = k;
    }

    r_.push_back(std::move(eta));
    push_log(kR, static_cast<int>(r_.size()) - 1);
  }

  // Starts a solve stage: fresh epoch, current entries marked as members.
  int stage_begin(SparseVector& v, SolveWorkspace& ws) const {
    ws.ensure(m_);
    const int epoch = ws.new_epoch();
    for (int i : v.indices()) ws.mark[i] = epoch;
    return epoch;
  }

  // After an aborted DFS, clear transient stamps and restore membership marks.
  void restore_marks(const SparseVector& v, SolveWorkspace& ws, int epoch) const {
    for (int r : ws.order) ws.mark[r] = 0;
    for (int r : ws.stack) ws.mark[r] = 0;
    for (int i : v.indices()) ws.mark[i] = epoch;
  }

  // ------------------------------------------------------------- L stages

  void solve_lower(SparseVector& v, SolveWorkspace& ws) const {
    const int epoch = stage_begin(v, ws);
    if (!use_graph(v.count())) {
      sweep_lower(v, ws, epoch);
      return;
    }
    ws.order.clear();
    const int cap = graph_cap();
    const int start_count = v.count();
    for (int s = 0; s < start_count; ++s) {
      if (!dfs_from(v.indices()[s], ws, epoch, cap, AdjLowerCol{this})) {
        restore_marks(v, ws, epoch);
        sweep_lower(v, ws, epoch);
        return;
      }
    }
    double* x = v.values();
    for (int t = static_cast<int>(ws.order.size()) - 1; t >= 0; --t) {
      const int r = ws.order[t];
      const double piv = x[r];
      if (piv == 0.0) continue;
      const int k = step_of_row_[r];
      for (int e = lc_start_[k]; e < lc_start_[k + 1]; ++e) x[lc_index_[e]] -= lc_value_[e] * piv;
    }
    v.replace_indices(ws.order);
  }

  void sweep_lower(SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    for (int k = 0; k < m_; ++k) {
      const double piv = x[pivot_row_[k]];
      if (piv == 0.0) continue;
      for (int t = lc_start_[k]; t < lc_start_[k + 1]; ++t) {
        const int i = lc_index_[t];
        if (ws.mark[i] != epoch) {
          ws.mark[i] = epoch;
          v.push_index(i);
        }
        x[i] -= lc_value_[t] * piv;
      }
    }
  }

  void solve_lower_transpose(SparseVector& v, SolveWorkspace& ws) const {
    const int epoch = stage_begin(v, ws);
    if (!use_graph(v.count())) {
      sweep_lower_transpose(v, ws, epoch);
      return;
    }
    ws.order.clear();
    const int cap = graph_cap();
    const int start_count = v.count();
    for (int s = 0; s < start_count; ++s) {
      if (!dfs_from(v.indices()[s], ws, epoch, cap, AdjLowerRow{this})) {
        restore_marks(v, ws, epoch);
        sweep_lower_transpose(v, ws, epoch);
        return;
      }
    }
    double* x = v.values();
    for (int t = static_cast<int>(ws.order.size()) - 1; t >= 0; --t) {
      const int i = ws.order[t];
      const double piv = x[i];
      if (piv == 0.0) continue;
      for (int e = lr_start_[i]; e < lr_start_[i + 1]; ++e) x[lr_target_[e]] -= lr_value_[e] * piv;
    }
    v.replace_indices(ws.order);
  }

  void sweep_lower_transpose(SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    for (int k = m_ - 1; k >= 0; --k) {
      double sum = 0.0;
      for (int t = lc_start_[k]; t < lc_start_[k + 1]; ++t)
        sum += lc_value_[t] * x[lc_index_[t]];
      if (sum != 0.0) {
        const int r = pivot_row_[k];
        if (ws.mark[r] != epoch) {
          ws.mark[r] = epoch;
          v.push_index(r);
        }
        x[r] -= sum;
      }
    }
  }

  // ------------------------------------------------------------- U stages

  void solve_upper(SparseVector& v, SolveWorkspace& ws) const {
    const int epoch = stage_begin(v, ws);
    if (!use_graph(v.count())) {
      sweep_upper(v, ws, epoch);
      return;
    }
    ws.order.clear();
    const int cap = graph_cap();
    const int start_count = v.count();
    for (int s = 0; s < start_count; ++s) {
      if (!dfs_from(v.indices()[s], ws, epoch, cap, AdjUpperCol{this})) {
        restore_marks(v, ws, epoch);
        sweep_upper(v, ws, epoch);
        return;
      }
    }
    double* x = v.values();
    for (int t = static_cast<int>(ws.order.size()) - 1; t >= 0; --t) {
      const int r = ws.order[t];
      const double rhs = x[r];
      if (rhs == 0.0) continue;
      const int k = step_of_row_[r];
      const double xv = rhs / upiv_[k];
      x[r] = xv;
      for (auto& e : ucol_[k]) x[e.first] -= e.second * xv;
    }
    v.replace_indices(ws.order);
  }

  void sweep_upper(SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    for (int k = tail_; k >= 0; k = prev_[k]) {
      const int r = pivot_row_[k];
      const double rhs = x[r];
      if (rhs == 0.0) continue;
      const double xv = rhs / upiv_[k];
      x[r] = xv;
      for (auto& e : ucol_[k]) {
        if (ws.mark[e.first] != epoch) {
          ws.mark[e.first] = epoch;
          v.push_index(e.first);
        }
        x[e.first] -= e.second * xv;
      }
    }
  }

  void solve_upper_transpose(SparseVector& v, SolveWorkspace& ws) const {
    const int epoch = stage_begin(v, ws);
    if (!use_graph(v.count())) {
      sweep_upper_transpose(v, ws, epoch);
      return;
    }
    ws.order.clear();
    const int cap = graph_cap();
    const int start_count = v.count();
    for (int s = 0; s < start_count; ++s) {
      if (!dfs_from(v.indices()[s], ws, epoch, cap, AdjUpperRow{this})) {
        restore_marks(v, ws, epoch);
        sweep_upper_transpose(v, ws, epoch);
        return;
      }
    }
    double* x = v.values();
    for (int t = static_cast<int>(ws.order.size()) - 1; t >= 0; --t) {
      const int r = ws.order[t];
      const double rhs = x[r];
      if (rhs == 0.0) continue;
      const int k = step_of_row_[r];
      const double zv = rhs / upiv_[k];
      x[r] = zv;
      for (auto& e : urow_[k]) x[e.first] -= e.second * zv;
    }
    v.replace_indices(ws.order);
  }

  void sweep_upper_transpose(SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    for (int k = head_; k >= 0; k = next_[k]) {
      const int r = pivot_row_[k];
      const double rhs = x[r];
      if (rhs == 0.0) continue;
      const double zv = rhs / upiv_[k];
      x[r] = zv;
      for (auto& e : urow_[k]) {
        if (ws.mark[e.first] != epoch) {
          ws.mark[e.first] = epoch;
          v.push_index(e.first);
        }
        x[e.first] -= e.second * zv;
      }
    }
  }

  // ------------------------------------------------------------- graph DFS

  // Adjacency views over the four solve directions. Nodes are rows.
  struct AdjLowerCol {  // row r feeds the L column of its step
    const FactorEngine* f;
    int begin(int r) const { return f->lc_start_[f->step_of_row_[r]]; }
    int end(int r) const { return f->lc_start_[f->step_of_row_[r] + 1]; }
    int at(int, int cursor) const { return f->lc_index_[cursor]; }
  };
  struct AdjLowerRow {  // row i feeds the pivot rows of steps whose L column holds i
    const FactorEngine* f;
    int begin(int i) const { return f->lr_start_[i]; }
    int end(int i) const { return f->lr_start_[i + 1]; }
    int at(int, int cursor) const { return f->lr_target_[cursor]; }
  };
  struct AdjUpperCol {  // row r feeds the U column of its step
    const FactorEngine* f;
    int begin(int) const { return 0; }
    int end(int r) const { return static_cast<int>(f->ucol_[f->step_of_row_[r]].size()); }
    int at(int r, int cursor) const { return f->ucol_[f->step_of_row_[r]][cursor].first; }
  };
  struct AdjUpperRow {  // row r feeds the home rows of its U row entries
    const FactorEngine* f;
    int begin(int) const { return 0; }
    int end(int r) const { return static_cast<int>(f->urow_[f->step_of_row_[r]].size()); }
    int at(int r, int cursor) const { return f->urow_[f->step_of_row_[r]][cursor].first; }
  };

  // Iterative DFS accumulating reverse postorder into ws.order. Returns false
  // when the reach set exceeds `cap` (caller reverts to a sweep). Stamp
  // states: epoch+1 on stack, epoch+2 ordered.
  template <class Adj>
  bool dfs_from(int root, SolveWorkspace& ws, int epoch, int cap, Adj adj) const {
    if (ws.mark[root] == epoch + 2) return true;
    ws.stack.clear();
    ws.edge.clear();
    ws.stack.push_back(root);
    ws.edge.push_back(adj.begin(root));
    ws.mark[root] = epoch + 1;
    while (!ws.stack.empty()) {
      const int node = ws.stack.back();
      int& cursor = ws.edge.back();
      const int stop = adj.end(node);
      bool descended = false;
      while (cursor < stop) {
        const int child = adj.at(node, cursor);
        ++cursor;
        if (ws.mark[child] == epoch + 1 || ws.mark[child] == epoch + 2) continue;
        ws.mark[child] = epoch + 1;
        ws.stack.push_back(child);
        ws.edge.push_back(adj.begin(child));
        descended = true;
        break;
      }
      if (descended) continue;
      ws.stack.pop_back();
      ws.edge.pop_back();
      ws.mark[node] = epoch + 2;
      ws.order.push_back(node);
      if (static_cast<int>(ws.order.size()) > cap) return false;
    }
    return true;
  }

  // ------------------------------------------------------------ eta kernels

  void walk_apf_ftran(SparseVector& v, SolveWorkspace& ws) const {
    if (apf_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (int e = static_cast<int>(log_kind_.size()) - 1; e >= 0; --e)
      if (log_kind_[e] == kApf) apply_apf_ftran(apf_[log_slot_[e]], v, ws, epoch);
  }
  void walk_apf_btran(SparseVector& v, SolveWorkspace& ws) const {
    if (apf_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (size_t e = 0; e < log_kind_.size(); ++e)
      if (log_kind_[e] == kApf) apply_apf_btran(apf_[log_slot_[e]], v, ws, epoch);
  }
  void walk_pf_ftran(SparseVector& v, SolveWorkspace& ws) const {
    if (pf_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (size_t e = 0; e < log_kind_.size(); ++e)
      if (log_kind_[e] == kPf) apply_pf_ftran(pf_[log_slot_[e]], v, ws, epoch);
  }
  void walk_pf_btran(SparseVector& v, SolveWorkspace& ws) const {
    if (pf_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (int e = static_cast<int>(log_kind_.size()) - 1; e >= 0; --e)
      if (log_kind_[e] == kPf) apply_pf_btran(pf_[log_slot_[e]], v, ws, epoch);
  }
  void walk_r_ftran(SparseVector& v, SolveWorkspace& ws) const {
    if (r_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (size_t e = 0; e < log_kind_.size(); ++e)
      if (log_kind_[e] == kR) apply_r_ftran(r_[log_slot_[e]], v, ws, epoch);
  }
  void walk_r_btran(SparseVector& v, SolveWorkspace& ws) const {
    if (r_.empty()) return;
    const int epoch = stage_begin(v, ws);
    for (int e = static_cast<int>(log_kind_.size()) - 1; e >= 0; --e)
      if (log_kind_[e] == kR) apply_r_btran(r_[log_slot_[e]], v, ws, epoch);
  }

  void apply_pf_ftran(const PfEta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    const double xp = x[eta.p];
    if (xp == 0.0) return;
    const double t = xp / eta.pivot;
    x[eta.p] = t;
    for (auto& e : eta.col) {
      if (ws.mark[e.first] != epoch) {
        ws.mark[e.first] = epoch;
        v.push_index(e.first);
      }
      x[e.first] -= e.second * t;
    }
  }

  void apply_pf_btran(const PfEta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    double sum = 0.0;
    for (auto& e : eta.col) sum += e.second * x[e.first];
    const double yp = (x[eta.p] - sum) / eta.pivot;
    if (ws.mark[eta.p] != epoch) {
      ws.mark[eta.p] = epoch;
      v.push_index(eta.p);
    }
    x[eta.p] = yp;
  }

  void apply_apf_ftran(const ApfEta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    double g = 0.0;
    for (auto& e : eta.row) g += e.second * x[e.first];
    if (g == 0.0) return;
    g /= eta.mu;
    for (auto& e : eta.dcol) {
      if (ws.mark[e.first] != epoch) {
        ws.mark[e.first] = epoch;
        v.push_index(e.first);
      }
      x[e.first] -= e.second * g;
    }
  }

  void apply_apf_btran(const ApfEta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    double g = 0.0;
    for (auto& e : eta.dcol) g += e.second * x[e.first];
    if (g == 0.0) return;
    g /= eta.mu;
    for (auto& e : eta.row) {
      if (ws.mark[e.first] != epoch) {
        ws.mark[e.first] = epoch;
        v.push_index(e.first);
      }
      x[e.first] -= e.second * g;
    }
  }

  void apply_r_ftran(const REta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    double sum = 0.0;
    for (auto& e : eta.terms) sum += e.second * x[e.first];
    if (sum == 0.0) return;
    if (ws.mark[eta.target] != epoch) {
      ws.mark[eta.target] = epoch;
      v.push_index(eta.target);
    }
    x[eta.target] -= sum;
  }

  void apply_r_btran(const REta& eta, SparseVector& v, SolveWorkspace& ws, int epoch) const {
    double* x = v.values();
    const double piv = x[eta.target];
    if (piv == 0.0) return;
    for (auto& e : eta.terms) {
      if (ws.mark[e.first] != epoch) {
        ws.mark[e.first] = epoch;
        v.push_index(e.first);
      }
      x[e.first] -= e.second * piv;
    }
  }

  // ------------------------------------------------------------- utilities

  bool use_graph(int rhs_count) const {
    switch (opts.route) {
      case FactorOptions::Route::kSweep:
        return false;
      case FactorOptions::Route::kGraph:
        return true;
      case FactorOptions::Route::kAuto:
        return rhs_count < graph_cap();
    }
    return false;
  }

  int graph_cap() const {
    if (opts.route == FactorOptions::Route::kGraph) return m_;
    const int cap = static_cast<int>(opts.hyper_switch * m_);
    return cap < 2 ? 2 : cap;
  }

  int m_ = 0;

  // Elimination structure (static between inverts).
  std::vector<int> pivot_row_;    // step -> row (and, post-relabel, position)
  std::vector<int> pivot_pos_;    // step -> basis position at invert time
  std::vector<int> step_of_row_;  // row -> step
  std::vector<double> upiv_;      // step -> U pivot

  std::vector<int> lc_start_, lc_index_;
  std::vector<double> lc_value_;
  std::vector<int> lr_start_, lr_target_;
  std::vector<double> lr_value_;

  // U, editable by factor updates.
  std::vector<std::vector<std::pair<int, double>>> ucol_;  // (row, value)
  std::vector<std::vector<std::pair<int, double>>> urow_;  // (home row of column, value)

  // Pivot order of U as a linked list over steps.
  std::vector<int> next_, prev_;
  int head_ = -1, tail_ = -1;

  // Update log.
  std::vector<PfEta> pf_;
  std::vector<ApfEta> apf_;
  std::vector<REta> r_;
  std::vector<int> log_kind_;
  std::vector<int> log_slot_;

  std::vector<double> scratch_;
  std::vector<int> tmp_idx_a_, tmp_idx_b_;
  std::vector<double> tmp_val_a_, tmp_val_b_;
};

// Infinity-norm residual ||B x - rhs|| of x = ftran(rhs), accumulated against
// the basis columns of the LP; a factorization health spot-check.
inline double factor_residual_error(const CompLp& lp, const std::vector<int>& basic,
                                    const FactorEngine& factor, const SparseVector& rhs_in,
                                    SolveWorkspace& ws) {
  SparseVector x(lp.num_row);
  x.copy_from(rhs_in);
  factor.ftran(x, ws);
  std::vector<double> acc(lp.num_row, 0.0);
  for (int pos : x.indices()) {
    const int j = basic[pos];
    const double xv = x.value(pos);
    for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k)
      acc[lp.col_index[k]] += lp.col_value[k] * xv;
  }
  double err = 0.0;
  for (int i = 0; i < lp.num_row; ++i) err = std::max(err, std::abs(acc[i] - rhs_in.value(i)));
  return err;
}

}  // namespace duplex
