#pragma once

#include <cmath>

#include "duplex/dual_core.hpp"

namespace duplex {

// Baseline single-threaded bound-flipping dual simplex with steepest-edge
// pricing. One iteration: pick the worst infeasible row, solve its basis row
// backward, price the nonbasic columns, run the flip-absorbing ratio test,
// solve the entering column (plus the weight and flip directions) forward,
// then apply the dual/primal/weight/basis/factor updates.
inline Solution solve_serial(const CompLp& lp, const SolveOptions& opts) {
  EngineContext ctx(lp, opts);
  WorkerCtx wc;
  wc.ws.ensure(lp.num_row);
  const double t0 = now_seconds();
  ctx.initial_basis();
  ctx.full_refresh();

  const bool use_ft = opts.scheme == UpdateScheme::kFt;
  SparseVector ep(lp.num_row), row_partial(lp.num_row), ahat(lp.num_row),
      col_partial(lp.num_row), tau(lp.num_row), flip_rhs(lp.num_row);
  PivotalRow row;
  RatioCandidates cands;
  Chuzc2Result pick;

  SolveStatus status = SolveStatus::kIterationLimit;
  bool fresh = true;  // factors fresh and state recomputed since the last pivot
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
      if (!fresh) {  // confirm feasibility against freshly computed state
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

    ctx.btran_row(p, ep, use_ft ? &row_partial : nullptr, wc);
    ctx.spmv_all(ep, row, wc);
    ctx.chuzc1(ep, row, delta_sign, cands, wc);
    ctx.chuzc2(cands, std::abs(delta), pick, wc);
    if (pick.unbounded) {
      if (!fresh) {  // confirm the ray against fresh factors
        ctx.full_refresh();
        fresh = true;
        continue;
      }
      status = SolveStatus::kDualUnbounded;
      break;
    }

    const int q = pick.q;
    ctx.ftran_column(q, ahat, use_ft ? &col_partial : nullptr, wc);
    const double a_pq = ahat.value(p);
    if (std::abs(a_pq) < ctx.tol.pivot || !ctx.pivot_values_agree(pick.a_raw, a_pq)) {
      if (ctx.factor.update_count() > 0 || !fresh) {
        ctx.full_refresh();
        fresh = true;
        continue;
      }
      // Fresh factors and the pivot still looks untrustworthy: set this row
      // aside and let a later rebuild reconsider it.
      ctx.heap.notify(p, 0.0);
      if (++drop_streak > lp.num_row) {
        status = SolveStatus::kNumericalFailure;
        break;
      }
      continue;
    }
    drop_streak = 0;

    const double theta_dual = delta_sign * pick.theta;
    const int leaving = ctx.basis.basic[p];
    const double w_p_old = ctx.weight[p];
    ctx.ftran_dse(ep, tau, wc);

    const SparseVector* flip_dx = nullptr;
    if (!pick.flips.empty()) {
      ctx.build_flip_rhs(pick.flips, flip_rhs);
      if (flip_rhs.count() > 0) {
        ctx.ftran_flip(flip_rhs, wc);
        flip_dx = &flip_rhs;
      }
    }

    ctx.update_dual(p, q, leaving, theta_dual, ep, row, wc);
    const double theta_p = delta_sign * pick.remaining / a_pq;
    ctx.update_primal(p, theta_p, ahat, flip_dx, ctx.work_value[q] + theta_p, wc);
    ctx.update_weights(p, ahat, tau, w_p_old, a_pq, wc);
    ctx.update_basis(p, q, leaving, delta > 0.0);

    bool update_failed = false;
    {
      ScopedTimer t(wc.clock, Comp::kUpdateFactor);
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
        update_failed = true;  // refactorize instead of updating
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

  ctx.clock.merge(wc.clock);
  ctx.counts.merge(wc.counts);
  return ctx.finish(status, now_seconds() - t0);
}

}  // namespace duplex
