#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "duplex/dual_core.hpp"
#include "duplex/parallel.hpp"

namespace duplex {

namespace pami_detail {

// One shortlisted row and the running state that lets minor iterations work
// against a frozen factorization: its basis-inverse row kept current through
// every accepted pivot, plus tracked scalars for its value and exact weight.
struct Candidate {
  int row = -1;
  double alpha_init = 0.0;  // attractiveness when shortlisted
  double alpha = 0.0;       // kept current through the minors
  double x = 0.0;           // tracked value of basic position `row`
  double w = 1.0;           // exact squared norm of `ehat`
  bool pivoted = false;
  bool dropped = false;
  SparseVector ehat;  // row of the running basis inverse
};

// One accepted minor pivot, with everything the deferred solves need.
struct MinorRecord {
  int p = -1, q = -1, leaving = -1, cand = -1;
  double theta_dual = 0.0, theta_p = 0.0;
  double a_pq_row = 0.0;  // pivotal value as priced off the row
  int num_flips = 0;
  SparseVector flip_rhs;       // raw column-space flip direction (may be empty)
  SparseVector ehat_at_pivot;  // row snapshot: rank-one data of this pivot
};

// Rank-one basis-change transform applied to a column-space vector:
// v <- v - (a_q - a_leaving) * (ehat . v) / a_pq.
inline void apply_rank_one_inverse(const CompLp& lp, const MinorRecord& rec, SparseVector& v) {
  const double num = dot(rec.ehat_at_pivot, v);
  if (num == 0.0) return;
  const double f = num / rec.a_pq_row;
  for (int k = lp.col_start[rec.q]; k < lp.col_start[rec.q + 1]; ++k)
    v.add(lp.col_index[k], -f * lp.col_value[k]);
  for (int k = lp.col_start[rec.leaving]; k < lp.col_start[rec.leaving + 1]; ++k)
    v.add(lp.col_index[k], f * lp.col_value[k]);
}

// Product-form correction of a deferred solve result: folds one accepted
// pivot's entering column into `v`.
inline void apply_pf_correction(const SparseVector& eta_col, int p, double a_pq,
                                SparseVector& v) {
  const double vp = v.value(p);
  if (vp == 0.0) return;
  const double step = vp / a_pq;
  for (int i : eta_col.indices()) {
    if (i == p) continue;
    v.add(i, -eta_col.value(i) * step);
  }
  v.values()[p] = step;
}

}  // namespace pami_detail

// Parallelism across multiple iterations: shortlist several attractive rows,
// run a train of cheap minor iterations against frozen factors (rows kept
// current by rank-one updates), then batch all deferred forward solves, the
// combined flip correction, the vector updates, and a collective factor
// update at the end of the major cycle. The pivot sequence is invariant to
// the worker count.
inline Solution solve_pami(const CompLp& lp, const SolveOptions& opts_in) {
  using pami_detail::Candidate;
  using pami_detail::MinorRecord;

  SolveOptions opts = opts_in;
  if (opts.pami.s < 1) opts.pami.s = 1;
  if (!(opts.pami.cutoff > 0.0) || opts.pami.cutoff > 1.001) opts.pami.cutoff = 0.95;
  if (opts.workers < 1) opts.workers = 1;

  EngineContext ctx(lp, opts);
  const int m = lp.num_row, workers = opts.workers, s = opts.pami.s;
  const double psi = opts.pami.cutoff;
  WorkerPool pool(workers);
  std::vector<WorkerCtx> wcs(workers);
  for (auto& wc : wcs) wc.ws.ensure(m);

  const double t0 = now_seconds();
  ctx.initial_basis();
  ctx.full_refresh();

  // Static pricing partition: structural columns shuffled once, split into
  // one contiguous block per worker.
  std::vector<int> perm(lp.num_struct());
  for (int j = 0; j < lp.num_struct(); ++j) perm[j] = j;
  {
    std::mt19937 prng(opts.seed);
    std::shuffle(perm.begin(), perm.end(), prng);
  }

  constexpr int kScanBlocks = 16;
  std::vector<std::vector<CandidateHeap::Best>> scan_top(kScanBlocks);

  std::vector<Candidate> cands;
  std::vector<MinorRecord> recs;
  std::vector<SparseVector> ahat(s), tau(s), spike(s);
  std::vector<RatioCandidates> slot(workers);
  RatioCandidates merged;
  PivotalRow prow;
  SparseVector bfrt(m);
  Chuzc2Result pick;
  std::vector<FtPivot> batch;

  SolveStatus status = SolveStatus::kIterationLimit;
  bool fresh = true;  // factors fresh and state recomputed, no pivots since
  int barren_majors = 0;
  bool done = false;
  PamiAudit audit;

  // Shortlist of up to `s` rows with the largest attractiveness: fixed-block
  // parallel scan, serial merge (worker-count invariant).
  auto major_chuzr = [&]() {
    ScopedTimer t(ctx.clock, Comp::kChuzr);
    pool.run_blocks(m, kScanBlocks, [&](int b, int begin, int end) {
      auto& top = scan_top[b];
      top.clear();
      for (int i = begin; i < end; ++i) {
        const double a = ctx.row_alpha(i);
        if (a <= 0.0) continue;
        top.push_back({i, a});
      }
      std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) {
        return x.alpha != y.alpha ? x.alpha > y.alpha : x.row < y.row;
      });
      if (static_cast<int>(top.size()) > s) top.resize(s);
    });
    std::vector<CandidateHeap::Best> all;
    for (auto& top : scan_top) all.insert(all.end(), top.begin(), top.end());
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
      return x.alpha != y.alpha ? x.alpha > y.alpha : x.row < y.row;
    });
    if (static_cast<int>(all.size()) > s) all.resize(s);
    cands.assign(all.size(), Candidate{});
    for (size_t c = 0; c < all.size(); ++c) {
      cands[c].row = all[c].row;
      cands[c].alpha_init = all[c].alpha;
      cands[c].alpha = all[c].alpha;
    }
  };

  while (!done) {
    if (ctx.over_iteration_limit()) {
      status = SolveStatus::kIterationLimit;
      break;
    }
    if (opts.time_limit >= 0.0 && now_seconds() - t0 > opts.time_limit) {
      status = SolveStatus::kTimeLimit;
      break;
    }

    major_chuzr();
    if (cands.empty()) {
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

    // Row solves for the whole shortlist, one parallel task each.
    pool.run(static_cast<int>(cands.size()), [&](int c, int w) {
      Candidate& cd = cands[c];
      ctx.btran_row(cd.row, cd.ehat, nullptr, wcs[w]);
      double norm = 0.0;
      for (int i : cd.ehat.indices()) norm += cd.ehat.value(i) * cd.ehat.value(i);
      cd.w = norm > EngineContext::kMinWeight ? norm : EngineContext::kMinWeight;
      cd.x = ctx.x_basic[cd.row];
      const int bj = ctx.basis.basic[cd.row];
      const double infeas =
          primal_infeasibility(cd.x, ctx.work_lower[bj], ctx.work_upper[bj]);
      cd.alpha = infeas > ctx.tol.primal ? infeas * infeas / cd.w : 0.0;
    });

    recs.clear();
    bool flips_in_window = false;
    bool abort_major = false;
    SolveStatus early_status = SolveStatus::kOptimal;
    bool have_early_status = false;

    // ---- minor loop against frozen factors ----
    for (;;) {
      const int t = static_cast<int>(recs.size());
      const int cap = flips_in_window ? s - 1 : s;
      if (t >= cap) break;
      if (ctx.over_iteration_limit() ||
          (opts.time_limit >= 0.0 && now_seconds() - t0 > opts.time_limit))
        break;

      // Minor row choice: drop spoiled candidates, take the best survivor.
      int best = -1;
      {
        ScopedTimer tt(ctx.clock, Comp::kChuzr);
        for (size_t c = 0; c < cands.size(); ++c) {
          Candidate& cd = cands[c];
          if (cd.pivoted || cd.dropped) continue;
          if (cd.alpha <= 0.0 || (t > 0 && cd.alpha < psi * cd.alpha_init)) {
            cd.dropped = true;
            continue;
          }
          if (best < 0 || cd.alpha > cands[best].alpha ||
              (cd.alpha == cands[best].alpha && cd.row < cands[best].row))
            best = static_cast<int>(c);
        }
      }
      if (best < 0) break;
      Candidate& cd = cands[best];
      const int p = cd.row;
      const int leaving = ctx.basis.basic[p];
      double delta = 0.0;
      if (cd.x < ctx.work_lower[leaving])
        delta = cd.x - ctx.work_lower[leaving];
      else if (cd.x > ctx.work_upper[leaving])
        delta = cd.x - ctx.work_upper[leaving];
      if (delta == 0.0) {
        cd.dropped = true;
        continue;
      }
      const int delta_sign = delta < 0.0 ? -1 : 1;

      // Pricing: logical part off the row, structural part fused with the
      // eligibility scan over the static shuffled partitions.
      merged.clear();
      {
        ScopedTimer tt(ctx.clock, Comp::kChuzc1);
        for (int i : cd.ehat.indices())
          ctx.chuzc1_candidate(lp.logical(i), cd.ehat.value(i), delta_sign, merged);
      }
      prow.reset(workers);
      const int ns = lp.num_struct();
      pool.run(workers, [&](int task, int w) {
        ScopedTimer tt(wcs[w].clock, Comp::kSpmv);
        auto& rc = slot[task];
        rc.clear();
        const int begin = task * ns / workers, end = (task + 1) * ns / workers;
        auto& idx = prow.bidx[task];
        auto& val = prow.bval[task];
        for (int kk = begin; kk < end; ++kk) {
          const int j = perm[kk];
          if (ctx.basis.status[j] == VarStatus::kBasic) continue;
          const double v = ctx.col_dot(cd.ehat, j);
          if (v == 0.0) continue;
          idx.push_back(j);
          val.push_back(v);
          ctx.chuzc1_candidate(j, v, delta_sign, rc);
        }
      });
      for (auto& rc : slot) {
        merged.col.insert(merged.col.end(), rc.col.begin(), rc.col.end());
        merged.a.insert(merged.a.end(), rc.a.begin(), rc.a.end());
        merged.d.insert(merged.d.end(), rc.d.begin(), rc.d.end());
        merged.raw.insert(merged.raw.end(), rc.raw.begin(), rc.raw.end());
      }

      ctx.chuzc2(merged, std::abs(delta), pick, wcs[0]);
      if (pick.unbounded) {
        if (t == 0 && fresh) {
          have_early_status = true;
          early_status = SolveStatus::kDualUnbounded;
        } else {
          abort_major = true;  // confirm against fresh factors first
        }
        break;
      }
      if (std::abs(pick.a_raw) < ctx.tol.pivot) {
        cd.dropped = true;  // unsafe pivot: spend the candidate, not the basis
        continue;
      }

      // Accept the pivot.
      const int q = pick.q;
      const double theta_dual = delta_sign * pick.theta;
      const double theta_p = delta_sign * pick.remaining / pick.a_raw;
      MinorRecord rec;
      rec.p = p;
      rec.q = q;
      rec.leaving = leaving;
      rec.cand = best;
      rec.theta_dual = theta_dual;
      rec.theta_p = theta_p;
      rec.a_pq_row = pick.a_raw;
      rec.num_flips = static_cast<int>(pick.flips.size());
      rec.ehat_at_pivot = cd.ehat;
      if (!pick.flips.empty()) {
        rec.flip_rhs.setup(m);
        ctx.build_flip_rhs(pick.flips, rec.flip_rhs);
        if (t < s - 2) flips_in_window = true;
      }

      // Dual update: logical part serial, structural blocks in parallel when
      // the row is dense enough to pay for it (identical bytes either way).
      {
        ScopedTimer tt(ctx.clock, Comp::kUpdateDual);
        if (theta_dual != 0.0) {
          for (int i : cd.ehat.indices()) {
            const int j = lp.logical(i);
            if (ctx.basis.status[j] == VarStatus::kBasic) continue;
            ctx.dual[j] -= theta_dual * cd.ehat.value(i);
          }
          size_t row_nnz = 0;
          for (auto& bi : prow.bidx) row_nnz += bi.size();
          auto block_axpy = [&](int b, int) {
            const auto& bi = prow.bidx[b];
            const auto& bv = prow.bval[b];
            for (size_t k2 = 0; k2 < bi.size(); ++k2) {
              const int j = bi[k2];
              if (ctx.basis.status[j] == VarStatus::kBasic) continue;
              ctx.dual[j] -= theta_dual * bv[k2];
            }
          };
          if (row_nnz >= static_cast<size_t>(opts.pami.density_revert * lp.num_struct()))
            pool.run(workers, block_axpy);
          else
            for (int b = 0; b < workers; ++b) block_axpy(b, 0);
        }
        ctx.dual[q] = 0.0;
        ctx.dual[leaving] = -theta_dual;
      }

      // Bring every other candidate's row, tracked value, weight, and
      // attractiveness up to date; one parallel task per candidate.
      const double entering_value = ctx.work_value[q] + theta_p;
      pool.run(static_cast<int>(cands.size()), [&](int c, int w) {
        ScopedTimer tt(wcs[w].clock, Comp::kBtran);
        Candidate& other = cands[c];
        if (c == best || other.dropped) return;
        const double arq = ctx.col_dot(other.ehat, q);
        double shift = theta_p * arq;
        if (rec.flip_rhs.count() > 0) shift += dot(rec.flip_rhs, other.ehat);
        other.x -= shift;
        if (arq != 0.0) {
          const double ratio = arq / rec.a_pq_row;
          for (int i : cd.ehat.indices()) other.ehat.add(i, -ratio * cd.ehat.value(i));
          other.ehat.prune(ctx.tol.zero_drop);
        }
        if (!other.pivoted) {
          double norm = 0.0;
          for (int i : other.ehat.indices())
            norm += other.ehat.value(i) * other.ehat.value(i);
          other.w = norm > EngineContext::kMinWeight ? norm : EngineContext::kMinWeight;
          const int bj = ctx.basis.basic[other.row];
          const double infeas =
              primal_infeasibility(other.x, ctx.work_lower[bj], ctx.work_upper[bj]);
          other.alpha = infeas > ctx.tol.primal ? infeas * infeas / other.w : 0.0;
        }
      });

      // The pivoted row itself: scale to become the entering variable's row.
      {
        const double inv = 1.0 / rec.a_pq_row;
        double* buf = cd.ehat.values();
        for (int i : cd.ehat.indices()) buf[i] *= inv;
        cd.x = entering_value;
        cd.pivoted = true;
      }
      ctx.update_basis(p, q, leaving, delta > 0.0);
      ctx.record_pivot(p, q, theta_dual, theta_p, rec.num_flips);
      ++ctx.iterations;
      ctx.note_step(theta_dual);
      recs.push_back(std::move(rec));
    }
    // ---- end minor loop ----

    if (have_early_status) {
      if (!recs.empty()) ctx.full_refresh();  // settle accepted pivots first
      status = early_status;
      break;
    }
    if (abort_major) {
      ctx.full_refresh();
      fresh = true;
      continue;
    }
    const int t = static_cast<int>(recs.size());
    if (t == 0) {
      if (!fresh) {
        ctx.full_refresh();
        fresh = true;
        continue;
      }
      if (++barren_majors > 2) {
        status = SolveStatus::kNumericalFailure;
        break;
      }
      ctx.full_refresh();
      continue;
    }
    barren_majors = 0;
    fresh = false;

    // Combined flip correction: fold every minor's raw flip direction through
    // the preceding rank-one transforms (newest first), then solve once.
    bool any_flips = false;
    bfrt.clear();
    for (int i = t - 1; i >= 0; --i) {
      if (recs[i].flip_rhs.count() > 0) {
        any_flips = true;
        for (int r : recs[i].flip_rhs.indices()) bfrt.add(r, recs[i].flip_rhs.value(r));
      }
      if (i > 0 && any_flips) pami_detail::apply_rank_one_inverse(lp, recs[i - 1], bfrt);
    }
    bfrt.prune(ctx.tol.zero_drop);
    any_flips = bfrt.count() > 0;

    // Deferred forward solves: t entering columns, t weight-update solves,
    // plus the one combined flip solve — all against the frozen factors.
    const int n_tasks = 2 * t + (any_flips ? 1 : 0);
    long long solves_before = 0;
    for (const auto& w : wcs) solves_before += w.counts.ftran;
    pool.run(n_tasks, [&](int task, int w) {
      WorkerCtx& wc = wcs[w];
      if (task < t) {
        ctx.ftran_column(recs[task].q, ahat[task], &spike[task], wc);
      } else if (task < 2 * t) {
        const int i = task - t;
        ctx.ftran_dse(recs[i].ehat_at_pivot, tau[i], wc);
      } else {
        ctx.ftran_flip(bfrt, wc);
      }
    });

    // Audit the group: the forward-solve op counters must show exactly
    // 2t (+1 with flips) solves, and early flips must have capped the minors.
    long long solves_after = 0;
    for (const auto& w : wcs) solves_after += w.counts.ftran;
    ++audit.update_groups;
    if (solves_after - solves_before != n_tasks) ++audit.task_count_mismatches;
    {
      int first_flip = -1;
      for (int i = 0; i < t; ++i)
        if (recs[i].num_flips > 0) {
          first_flip = i;
          break;
        }
      if (first_flip >= 0 && first_flip <= s - 3 && t > s - 1) ++audit.orphan_breaches;
    }

    // Update parts: fold each accepted pivot into the later solves, checking
    // the row-priced pivot against the solved column as we go.
    bool dirty = false;
    {
      ScopedTimer tt(ctx.clock, Comp::kFtran);
      for (int j = 0; j < t && !dirty; ++j) {
        const double a_pq_col = ahat[j].value(recs[j].p);
        if (std::abs(a_pq_col) < ctx.tol.pivot ||
            !ctx.pivot_values_agree(recs[j].a_pq_row, a_pq_col)) {
          dirty = true;
          break;
        }
        const int targets = 2 * (t - 1 - j);
        if (targets == 0) continue;
        auto correct_one = [&](int task, int) {
          const int i = j + 1 + task % (t - 1 - j);
          SparseVector& v = task < t - 1 - j ? ahat[i] : tau[i];
          pami_detail::apply_pf_correction(ahat[j], recs[j].p, a_pq_col, v);
        };
        if (ahat[j].count() >= static_cast<int>(opts.pami.density_revert * m))
          pool.run(targets, correct_one);
        else
          for (int k2 = 0; k2 < targets; ++k2) correct_one(k2, 0);
      }
    }
    if (dirty) {
      ctx.full_refresh();
      fresh = true;
      continue;
    }

    // Primal update: per-row chain over the pivots in order plus the combined
    // flip correction, then the tracked values of the pivoted positions.
    {
      ScopedTimer tt(ctx.clock, Comp::kUpdatePrimal);
      size_t nnz = static_cast<size_t>(any_flips ? bfrt.count() : 0);
      for (int i = 0; i < t; ++i) nnz += static_cast<size_t>(ahat[i].count());
      auto apply_rows = [&](int, int begin, int end) {
        for (int i = 0; i < t; ++i) {
          const double step = recs[i].theta_p;
          const int p_i = recs[i].p;
          for (int r : ahat[i].indices()) {
            if (r == p_i || r < begin || r >= end) continue;
            ctx.x_basic[r] -= step * ahat[i].value(r);
          }
        }
        if (any_flips)
          for (int r : bfrt.indices()) {
            if (r < begin || r >= end) continue;
            ctx.x_basic[r] -= bfrt.value(r);
          }
      };
      if (nnz >= static_cast<size_t>(opts.pami.density_revert * m) && workers > 1)
        pool.run_blocks(m, workers, apply_rows);
      else
        apply_rows(0, 0, m);
      for (int i = 0; i < t; ++i) ctx.x_basic[recs[i].p] = cands[recs[i].cand].x;
    }

    // Weight update: the usual per-pivot law, chronological.
    {
      ScopedTimer tt(ctx.clock, Comp::kUpdateWeight);
      for (int i = 0; i < t; ++i) {
        const int p_i = recs[i].p;
        const double a_pq = ahat[i].value(p_i);
        const double w_p_old = ctx.weight[p_i];
        const double inv = 1.0 / a_pq;
        for (int r : ahat[i].indices()) {
          if (r == p_i) continue;
          const double ratio = ahat[i].value(r) * inv;
          double w = ctx.weight[r] - ratio * (2.0 * tau[i].value(r) - ratio * w_p_old);
          if (w < EngineContext::kMinWeight) w = EngineContext::kMinWeight;
          ctx.weight[r] = w;
        }
        double wp = w_p_old * inv * inv;
        if (wp < EngineContext::kMinWeight) wp = EngineContext::kMinWeight;
        ctx.weight[p_i] = wp;
      }
    }

    // Collective factor update from the stored partials; failures and the
    // refactorization budget both fall back to a fresh factorization.
    {
      ScopedTimer tt(ctx.clock, Comp::kUpdateFactor);
      batch.assign(t, FtPivot{});
      for (int i = 0; i < t; ++i) {
        batch[i].row = recs[i].p;
        for (int r : spike[i].indices()) {
          const double v = spike[i].value(r);
          if (std::abs(v) <= ctx.tol.zero_drop) continue;
          batch[i].spike_index.push_back(r);
          batch[i].spike_value.push_back(v);
        }
      }
      try {
        ctx.factor.collective_ft(batch, ctx.ws);
      } catch (const Error&) {
        ctx.full_refresh();
        fresh = true;
        continue;
      }
    }
    if (ctx.factor.needs_refactor()) {
      ctx.full_refresh();
      fresh = true;
    }
  }

  for (auto& wc : wcs) {
    ctx.clock.merge(wc.clock);
    ctx.counts.merge(wc.counts);
  }
  Solution sol = ctx.finish(status, now_seconds() - t0);
  sol.pami_audit = audit;
  return sol;
}

}  // namespace duplex
