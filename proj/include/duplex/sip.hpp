#pragma once

#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include "duplex/dual_core.hpp"
#include "duplex/parallel.hpp"

namespace duplex {

// Executed-order log of the per-iteration task graph; tests use it to assert
// that no stage ever starts before its inputs exist.
struct SipTrace {
  std::mutex mu;
  std::vector<std::string> events;
  void record(const char* name) {
    std::lock_guard<std::mutex> lock(mu);
    events.push_back(name);
  }
  int index_of(const std::string& name, int nth = 0) const {
    int seen = 0;
    for (size_t i = 0; i < events.size(); ++i)
      if (events[i] == name && seen++ == nth) return static_cast<int>(i);
    return -1;
  }
};

// Single-iteration task parallelism. Each iteration forks twice around the
// serial spine CHUZR -> BTRAN -> ... -> CHUZC2 -> ... -> updates:
//
//   fork 1 (after BTRAN):   weight solve  ||  logical pricing  ||  one task
//                           per structural pricing block
//   fork 2 (after CHUZC2):  entering-column solve  ||  flip solve (only when
//                           flips happened)  ||  dual update with the frozen
//                           step
//
// All block splits are fixed, so results are identical to the serial engine
// byte for byte, whatever the worker count.
inline Solution solve_sip(const CompLp& lp, const SolveOptions& opts_in,
                          SipTrace* trace = nullptr) {
  SolveOptions opts = opts_in;
  if (opts.workers < 1) opts.workers = 1;
  EngineContext ctx(lp, opts);
  const int workers = opts.workers;
  WorkerPool pool(workers);
  std::vector<WorkerCtx> wcs(workers);
  for (auto& wc : wcs) wc.ws.ensure(lp.num_row);

  const double t0 = now_seconds();
  ctx.initial_basis();
  ctx.full_refresh();

  const bool use_ft = opts.scheme == UpdateScheme::kFt;
  SparseVector ep(lp.num_row), row_partial(lp.num_row), ahat(lp.num_row),
      col_partial(lp.num_row), tau(lp.num_row), flip_rhs(lp.num_row);
  PivotalRow row;
  std::vector<RatioCandidates> slot(EngineContext::kSpmvBlocks);
  RatioCandidates merged;
  Chuzc2Result pick;
  auto note = [&](const char* ev) {
    if (trace != nullptr) trace->record(ev);
  };

  SolveStatus status = SolveStatus::kIterationLimit;
  bool fresh = true;
  int drop_streak = 0;
  for (;;) {
    if (ctx.over_iteration_limit()) {
      status = SolveStatus::kIterationLimit;
      break;
    }
    if (opts.time_limit >= 0.0 && now_seconds() - t0 > opts.time_limit) {
      status = SolveStatus::kTimeLimit;
      break;
    }

    const int p = ctx.chuzr();
    if (p < 0) {
      if (!fresh) {
        ctx.full_refresh();
        fresh = true;
        continue;
      }
      if (ctx.perturbed) {
        ctx.remove_perturbation();
        if (ctx.max_dual_infeasibility() > ctx.tol.dual) {
          ctx.full_refresh();
          continue;
        }
      }
      const double dviol = ctx.max_dual_infeasibility();
      if (dviol > 1e3 * ctx.tol.dual) {
        status = SolveStatus::kNumericalFailure;
        break;
      }
      if (dviol > ctx.tol.dual)
        ctx.warnings.push_back("reduced costs carry residual error at optimality");
      status = SolveStatus::kOptimal;
      break;
    }

    const double delta = ctx.signed_infeasibility(p);
    const int delta_sign = delta < 0.0 ? -1 : 1;

    ctx.btran_row(p, ep, use_ft ? &row_partial : nullptr, wcs[0]);
    note("btran-done");

    // Fork 1: weight solve overlaps all of the pricing work.
    row.reset(EngineContext::kSpmvBlocks);
    RatioCandidates logical_cands;
    pool.run(2 + EngineContext::kSpmvBlocks, [&](int task, int w) {
      WorkerCtx& wc = wcs[w];
      if (task == 0) {
        note("ftran-dse-start");
        ctx.ftran_dse(ep, tau, wc);
        note("ftran-dse-done");
      } else if (task == 1) {
        ScopedTimer tt(wc.clock, Comp::kChuzc1);
        for (int i : ep.indices())
          ctx.chuzc1_candidate(lp.logical(i), ep.value(i), delta_sign, logical_cands);
      } else {
        const int b = task - 2;
        ctx.spmv_block(ep, b, row, wc);
        ScopedTimer tt(wc.clock, Comp::kChuzc1);
        auto& rc = slot[b];
        rc.clear();
        for (size_t k = 0; k < row.bidx[b].size(); ++k)
          ctx.chuzc1_candidate(row.bidx[b][k], row.bval[b][k], delta_sign, rc);
      }
    });
    note("pricing-done");

    // Merge order matches the serial engine: logicals, then blocks ascending.
    merged.clear();
    merged.col = std::move(logical_cands.col);
    merged.a = std::move(logical_cands.a);
    merged.d = std::move(logical_cands.d);
    merged.raw = std::move(logical_cands.raw);
    for (auto& rc : slot) {
      merged.col.insert(merged.col.end(), rc.col.begin(), rc.col.end());
      merged.a.insert(merged.a.end(), rc.a.begin(), rc.a.end());
      merged.d.insert(merged.d.end(), rc.d.begin(), rc.d.end());
      merged.raw.insert(merged.raw.end(), rc.raw.begin(), rc.raw.end());
    }

    ctx.chuzc2(merged, std::abs(delta), pick, wcs[0]);
    note("chuzc2-done");
    if (pick.unbounded) {
      if (!fresh) {
        ctx.full_refresh();
        fresh = true;
        continue;
      }
      status = SolveStatus::kDualUnbounded;
      break;
    }

    const int q = pick.q;
    const int leaving = ctx.basis.basic[p];
    const double theta_dual = delta_sign * pick.theta;
    const double w_p_old = ctx.weight[p];

    // Flip bookkeeping is cheap and mutates shared state: do it before the
    // fork, solve the resulting direction inside it.
    const bool have_flips = !pick.flips.empty();
    bool solve_flips = false;
    if (have_flips) {
      ctx.build_flip_rhs(pick.flips, flip_rhs);
      solve_flips = flip_rhs.count() > 0;
    }

    // Fork 2: entering-column solve, optional flip solve, and the dual update
    // with the frozen step all run concurrently.
    pool.run(2 + (solve_flips ? 1 : 0), [&](int task, int w) {
      WorkerCtx& wc = wcs[w];
      if (task == 0) {
        note("ftran-start");
        ctx.ftran_column(q, ahat, use_ft ? &col_partial : nullptr, wc);
        note("ftran-done");
      } else if (task == 1) {
        note("update-dual-start");
        ctx.update_dual(p, q, leaving, theta_dual, ep, row, wc);
        note("update-dual-done");
      } else {
        note("ftran-bfrt-start");
        ctx.ftran_flip(flip_rhs, wc);
        note("ftran-bfrt-done");
      }
    });

    const double a_pq = ahat.value(p);
    if (std::abs(a_pq) < ctx.tol.pivot || !ctx.pivot_values_agree(pick.a_raw, a_pq)) {
      // The dual update already ran, so recover by refactorizing; when the
      // factors were already fresh, also shelve the row.
      if (ctx.factor.update_count() == 0 && fresh) {
        ctx.heap.notify(p, 0.0);
        if (++drop_streak > lp.num_row) {
          status = SolveStatus::kNumericalFailure;
          break;
        }
      }
      ctx.full_refresh();
      fresh = true;
      continue;
    }
    drop_streak = 0;

    note("update-weight-start");
    ctx.update_weights(p, ahat, tau, w_p_old, a_pq, wcs[0]);
    note("update-primal-start");
    const double theta_p = delta_sign * pick.remaining / a_pq;
    ctx.update_primal(p, theta_p, ahat, solve_flips ? &flip_rhs : nullptr,
                      ctx.work_value[q] + theta_p, wcs[0]);
    ctx.update_basis(p, q, leaving, delta > 0.0);

    bool update_failed = false;
    {
      note("update-factor-start");
      ScopedTimer tt(wcs[0].clock, Comp::kUpdateFactor);
      try {
        switch (opts.scheme) {
          case UpdateScheme::kFt:
            ctx.factor.append_ft(p, col_partial, row_partial);
            break;
          case UpdateScheme::kPf:
            ctx.factor.append_pf(ahat, p);
            break;
          case UpdateScheme::kApf:
            ctx.factor.append_apf(ep, lp, q, leaving);
            break;
        }
      } catch (const Error&) {
        update_failed = true;
      }
    }

    ctx.record_pivot(p, q, theta_dual, theta_p, static_cast<int>(pick.flips.size()));
    ++ctx.iterations;
    ctx.note_step(theta_dual);
    if (update_failed || ctx.factor.needs_refactor()) {
      ctx.full_refresh();
      fresh = true;
    } else {
      fresh = false;
    }
  }

  for (auto& wc : wcs) {
    ctx.clock.merge(wc.clock);
    ctx.counts.merge(wc.counts);
  }
  return ctx.finish(status, now_seconds() - t0);
}

}  // namespace duplex
