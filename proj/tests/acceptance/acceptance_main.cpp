// Acceptance gate for the solver library. Each numbered criterion prints one
// PASS/FAIL line (criterion 11 is a REPORT: measured and printed, never
// gating). The process exits nonzero if any gating criterion fails.
//
// Reference data is independent by construction: a dense-tableau two-phase
// simplex (tests/support/dense_simplex.hpp) for objectives, dense
// Gauss-Jordan inverses for factor actions and pricing weights, and pinned
// CSVs for cross-checking the generated model suite.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "duplex/duplex.hpp"
#include "support/dense_linalg.hpp"
#include "support/dense_simplex.hpp"
#include "support/factor_helpers.hpp"
#include "support/lp_build.hpp"
#include "support/lp_random.hpp"
#include "support/suites.hpp"

using namespace duplex;
using testsupport::basis_matrix;
using testsupport::coeff_by_column;
using testsupport::Dense;
using testsupport::dense_btran;
using testsupport::dense_ftran;
using testsupport::dense_inverse;
using testsupport::make_plan;
using testsupport::random_square_lp;
using testsupport::refresh;
using testsupport::rel_diff;
using testsupport::sparse_column;
using testsupport::structural_basis;
using testsupport::to_dense;
using testsupport::unit;

namespace {

// Gating tolerances, pinned here.
constexpr double kObjRelTol = 1e-6;        // engine objective vs dense oracle
constexpr double kOracleBudgetS = 60.0;    // criterion 1 wall-clock budget
constexpr double kFlipFoldRelTol = 1e-10;  // combined vs per-step flip solve
constexpr double kSchemeRelTol = 1e-8;     // update schemes vs fresh factors
constexpr double kWeightRelTol = 1e-5;     // maintained vs recomputed weights
constexpr double kUlps = 1e-15;            // "exact" for log/exp round trips

struct Line {
  bool pass = false;
  std::string text;
};

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// The random model set: the 50 pinned instances plus five at the size cap
// (40 rows, 80 columns, density 0.2).
std::vector<testsupport::RandomLpSpec> random_models() {
  auto models = testsupport::reference_suite();
  for (unsigned s = 101; s <= 105; ++s) {
    testsupport::RandomLpSpec spec;
    spec.seed = s;
    spec.rows = 40;
    spec.structurals = 40;
    spec.density = 0.2;
    models.push_back(spec);
  }
  return models;
}

double rel_gap(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// --------------------------------------------------------------- criterion 1

Line oracle_correctness() {
  const double t0 = now_s();
  std::vector<CompLp> models;
  for (const auto& spec : random_models()) models.push_back(testsupport::make_random_lp(spec));
  for (const auto& name : testsupport::mps_fixture_names())
    models.push_back(testsupport::load_fixture(name));

  int solved = 0;
  double worst = 0.0;
  std::string first_fail;
  for (const CompLp& lp : models) {
    const auto oracle = testsupport::dense_simplex_solve(lp);
    if (!oracle.optimal) {
      first_fail = lp.name + ": reference solver did not reach an optimum";
      break;
    }
    SolveOptions serial_opts;
    SolveOptions pami_opts;
    pami_opts.workers = 3;
    SolveOptions sip_opts;
    sip_opts.workers = 2;
    const Solution runs[3] = {solve_serial(lp, serial_opts), solve_pami(lp, pami_opts),
                              solve_sip(lp, sip_opts)};
    const char* names[3] = {"serial", "pami", "sip"};
    bool ok = true;
    for (int e = 0; e < 3; ++e) {
      const double gap = rel_gap(runs[e].objective, oracle.objective);
      worst = std::max(worst, gap);
      if (runs[e].status != SolveStatus::kOptimal || gap > kObjRelTol) {
        first_fail = fmt("%s/%s: status %s, rel gap %.3e", lp.name.c_str(), names[e],
                         status_name(runs[e].status), gap);
        ok = false;
        break;
      }
    }
    if (!ok) break;
    ++solved;
  }
  const double secs = now_s() - t0;
  if (solved != static_cast<int>(models.size()))
    return {false, "objective agreement: " + first_fail};
  if (secs >= kOracleBudgetS)
    return {false, fmt("objective agreement: %d models fine but took %.1f s (budget %.0f s)",
                       solved, secs, kOracleBudgetS)};
  return {true, fmt("objective agreement: %d models (55 random + 5 MPS) x 3 engines optimal, "
                    "max rel gap %.2e (tol %.0e), %.2f s (budget %.0f s)",
                    solved, worst, kObjRelTol, secs, kOracleBudgetS)};
}

// --------------------------------------------------------------- criterion 2

Line worker_determinism() {
  int checked = 0;
  for (const auto& spec : random_models()) {
    CompLp lp = testsupport::make_random_lp(spec);
    std::string pami_ref, sip_ref;
    for (int w : {1, 2, 4, 8}) {
      SolveOptions o;
      o.workers = w;
      const Solution p = solve_pami(lp, o);
      const Solution s = solve_sip(lp, o);
      if (w == 1) {
        pami_ref = p.pivot_log;
        sip_ref = s.pivot_log;
        continue;
      }
      if (p.pivot_log != pami_ref)
        return {false, fmt("worker determinism: pami log diverges on %s at %d workers",
                           lp.name.c_str(), w)};
      if (s.pivot_log != sip_ref)
        return {false, fmt("worker determinism: sip log diverges on %s at %d workers",
                           lp.name.c_str(), w)};
    }
    ++checked;
  }
  return {true, fmt("worker determinism: pami and sip pivot logs byte-identical across "
                    "1/2/4/8 workers on %d models",
                    checked)};
}

// --------------------------------------------------------------- criterion 3

// Combined bound-flip correction: folding every minor iteration's raw flip
// direction through the preceding rank-one basis transforms and solving once
// against the frozen factors must equal solving each direction against its
// own then-current basis. Records are synthesized; the fold code under test
// is the engine's own.
Line combined_flip_identity() {
  std::mt19937 rng(911);
  std::uniform_real_distribution<double> val(0.1, 2.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  long long records = 0, with_flips = 0, sequences = 0;
  double worst = 0.0;
  for (unsigned trial = 0; records < 200; ++trial) {
    if (trial > 400) return {false, "combined flip correction: record generation stalled"};
    const int m = 5 + static_cast<int>(rng() % 26);  // 5..30
    CompLp lp = random_square_lp(m, 0.35, 5000 + trial);
    std::vector<int> live = structural_basis(lp);
    const std::vector<int> frozen = live;
    const int t = 1 + static_cast<int>(rng() % 8);  // 1..8

    std::vector<pami_detail::MinorRecord> recs;
    std::vector<double> delta_ref(m, 0.0);
    std::vector<bool> row_used(m, false);
    for (int k = 0; k < t; ++k) {
      const Dense inv = dense_inverse(basis_matrix(lp, live));
      int p = -1;
      for (int tries = 0; tries < 100 && p < 0; ++tries) {
        const int cand = static_cast<int>(rng() % m);
        if (!row_used[cand]) p = cand;
      }
      if (p < 0) break;
      SparseVector ehat(m);
      for (int j = 0; j < m; ++j)
        if (std::abs(inv.at(p, j)) > 1e-14) ehat.set(j, inv.at(p, j));

      int q = -1;
      double a_pq = 0.0;
      for (int tries = 0; tries < 300 && q < 0; ++tries) {
        const int cand = static_cast<int>(rng() % lp.num_col);
        bool used = false;
        for (int b : live) used = used || b == cand;
        for (auto& r : recs) used = used || r.q == cand;
        if (used) continue;
        const double a = dot(ehat, sparse_column(lp, cand));
        if (std::abs(a) < 5e-2) continue;
        q = cand;
        a_pq = a;
      }
      if (q < 0) break;

      pami_detail::MinorRecord rec;
      rec.p = p;
      rec.q = q;
      rec.leaving = live[p];
      rec.a_pq_row = a_pq;
      rec.ehat_at_pivot = ehat;
      if (u01(rng) < 0.7) {
        rec.flip_rhs.setup(m);
        for (int i = 0; i < m; ++i)
          if (u01(rng) < 0.4) rec.flip_rhs.set(i, (u01(rng) < 0.5 ? -1 : 1) * val(rng));
        rec.num_flips = rec.flip_rhs.count();
      }

      // Reference: this minor's direction solved against its own basis.
      if (rec.flip_rhs.count() > 0) {
        const auto part = testsupport::apply(inv, to_dense(rec.flip_rhs));
        for (int i = 0; i < m; ++i) delta_ref[i] += part[i];
        ++with_flips;
      }
      recs.push_back(std::move(rec));
      row_used[p] = true;
      live[p] = q;
      ++records;
    }
    if (recs.empty()) continue;
    ++sequences;

    // Combined: the engine's newest-first fold, then one frozen-basis solve.
    SparseVector bfrt(m);
    bool any = false;
    for (int i = static_cast<int>(recs.size()) - 1; i >= 0; --i) {
      if (recs[i].flip_rhs.count() > 0) {
        any = true;
        for (int r : recs[i].flip_rhs.indices()) bfrt.add(r, recs[i].flip_rhs.value(r));
      }
      if (i > 0 && any) pami_detail::apply_rank_one_inverse(lp, recs[i - 1], bfrt);
    }
    const auto delta_comb =
        testsupport::apply(dense_inverse(basis_matrix(lp, frozen)), to_dense(bfrt));
    worst = std::max(worst, rel_diff(delta_comb, delta_ref));
  }
  if (worst > kFlipFoldRelTol)
    return {false, fmt("combined flip correction: max rel diff %.3e exceeds %.0e", worst,
                       kFlipFoldRelTol)};
  return {true, fmt("combined flip correction: %lld minor records (%lld with flips) over "
                    "%lld sequences, max rel diff %.2e (tol %.0e)",
                    records, with_flips, sequences, worst, kFlipFoldRelTol)};
}

// --------------------------------------------------------------- criterion 4

Line scheme_equivalence() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  int trials = 0;
  double worst = 0.0;
  SolveWorkspace ws;
  for (unsigned attempt = 0; trials < 200; ++attempt) {
    if (attempt > 400) return {false, "update-scheme agreement: plan generation stalled"};
    const int m = 6 + static_cast<int>(rng() % 19);  // 6..24
    const int len = 1 + static_cast<int>(rng() % 8); // 1..8
    CompLp lp = random_square_lp(m, 0.30 + 0.02 * (attempt % 5), 9000 + attempt);
    ws.ensure(m);

    FactorEngine f_pf, f_apf, f_ft, f_cft;
    std::vector<int> b0 = structural_basis(lp), b1 = b0, b2 = b0, b3 = b0;
    refresh(f_pf, lp, b0);
    refresh(f_apf, lp, b1);
    refresh(f_ft, lp, b2);
    refresh(f_cft, lp, b3);
    if (b0 != b1 || b0 != b2 || b0 != b3)
      return {false, "update-scheme agreement: relabeling not deterministic"};
    std::vector<int> live = b0;
    const auto plan = make_plan(lp, live, len, 7700 + attempt);
    if (static_cast<int>(plan.size()) != len) continue;

    // Collective path first: every spike against the still-frozen factors.
    std::vector<FtPivot> batch(plan.size());
    for (size_t i = 0; i < plan.size(); ++i) {
      SparseVector aq = sparse_column(lp, plan[i].q), partial(m);
      f_cft.ftran(aq, ws, &partial);
      batch[i].row = plan[i].p;
      for (int r : partial.indices())
        if (std::abs(partial.value(r)) > 1e-14) {
          batch[i].spike_index.push_back(r);
          batch[i].spike_value.push_back(partial.value(r));
        }
    }
    try {
      f_cft.collective_ft(batch, ws);
    } catch (const FtFailure&) {
      return {false, fmt("update-scheme agreement: collective update rejected trial %d", trials)};
    }

    for (auto [p, q] : plan) {
      SparseVector ahat = sparse_column(lp, q);
      f_pf.ftran(ahat, ws);
      f_pf.append_pf(ahat, p);

      SparseVector ep_apf = unit(m, p);
      f_apf.btran(ep_apf, ws);
      f_apf.append_apf(ep_apf, lp, q, live[p]);

      SparseVector ep = unit(m, p), row_partial(m);
      f_ft.btran(ep, ws, &row_partial);
      SparseVector aq = sparse_column(lp, q), col_partial(m);
      f_ft.ftran(aq, ws, &col_partial);
      f_ft.append_ft(p, col_partial, row_partial);

      live[p] = q;
    }

    FactorEngine f_inv;
    std::vector<int> binv = live;
    refresh(f_inv, lp, binv);

    const Dense inv = dense_inverse(basis_matrix(lp, live));
    for (int probe = 0; probe < 2; ++probe) {
      std::vector<double> r(m);
      for (auto& x : r) x = val(rng);
      const auto want_cols = coeff_by_column(lp, live, testsupport::apply(inv, r));
      for (auto [f, layout] : {std::pair{&f_pf, &live},
                               {&f_apf, &live},
                               {&f_ft, &live},
                               {&f_cft, &live},
                               {&f_inv, &binv}}) {
        SparseVector v(m);
        for (int i = 0; i < m; ++i) v.set(i, r[i]);
        f->ftran(v, ws);
        worst = std::max(worst, rel_diff(coeff_by_column(lp, *layout, to_dense(v)), want_cols));
      }
      const auto wantT = testsupport::apply_transpose(inv, r);
      for (FactorEngine* f : {&f_pf, &f_apf, &f_ft, &f_cft}) {
        SparseVector v(m);
        for (int i = 0; i < m; ++i) v.set(i, r[i]);
        f->btran(v, ws);
        worst = std::max(worst, rel_diff(to_dense(v), wantT));
      }
      const auto wantT_inv = dense_btran(lp, binv, r);
      SparseVector v(m);
      for (int i = 0; i < m; ++i) v.set(i, r[i]);
      f_inv.btran(v, ws);
      worst = std::max(worst, rel_diff(to_dense(v), wantT_inv));
    }
    ++trials;
  }
  if (worst > kSchemeRelTol)
    return {false,
            fmt("update-scheme agreement: max rel diff %.3e exceeds %.0e", worst, kSchemeRelTol)};
  return {true, fmt("update-scheme agreement: %d pivot sequences (len <= 8), PF/APF/FT/"
                    "collective-FT/refactor, max rel diff %.2e (tol %.0e)",
                    trials, worst, kSchemeRelTol)};
}

// ---------------------------------------------------------- criteria 5 and 6

struct BoundarySweep {
  long long boundaries = 0;
  long long weight_checkpoints = 0;
  long long dual_violations = 0;
  double worst_weight_rel = 0.0;
  double worst_dual = 0.0;
  bool ok = true;
  std::string detail;
};

// Replays every model to each iteration boundary (deterministic trajectories
// make the replays exact) and checks the exit invariants there.
BoundarySweep boundary_sweep() {
  BoundarySweep sw;
  const double dual_tol = Tolerances{}.dual;
  for (const auto& spec : random_models()) {
    CompLp lp = testsupport::make_random_lp(spec);
    const Solution full = solve_serial(lp, SolveOptions{});
    if (full.status != SolveStatus::kOptimal) {
      sw.ok = false;
      sw.detail = lp.name + " did not solve";
      return sw;
    }
    for (long long k = 0; k <= full.iterations; ++k) {
      SolveOptions o;
      o.iteration_limit = k;
      const Solution sol = solve_serial(lp, o);
      ++sw.boundaries;
      sw.worst_dual = std::max(sw.worst_dual, sol.max_dual_infeas);
      if (sol.max_dual_infeas > dual_tol) ++sw.dual_violations;
      if (k == 0) continue;  // weights start exact by construction
      const Dense inv = dense_inverse(basis_matrix(lp, sol.basis.basic));
      for (int i = 0; i < lp.num_row; ++i) {
        double truth = 0.0;
        for (int j = 0; j < lp.num_row; ++j) truth += inv.at(i, j) * inv.at(i, j);
        sw.worst_weight_rel =
            std::max(sw.worst_weight_rel, std::abs(sol.row_weights[i] - truth) / truth);
      }
      ++sw.weight_checkpoints;
    }
  }
  return sw;
}

Line weight_fidelity(const BoundarySweep& sw) {
  if (!sw.ok) return {false, "pricing-weight fidelity: " + sw.detail};
  if (sw.worst_weight_rel > kWeightRelTol)
    return {false, fmt("pricing-weight fidelity: max rel drift %.3e exceeds %.0e",
                       sw.worst_weight_rel, kWeightRelTol)};
  return {true, fmt("pricing-weight fidelity: %lld boundary checkpoints (covers every 25th "
                    "iteration), max rel drift %.2e (tol %.0e)",
                    sw.weight_checkpoints, sw.worst_weight_rel, kWeightRelTol)};
}

Line dual_feasibility(const BoundarySweep& sw) {
  if (!sw.ok) return {false, "dual feasibility: " + sw.detail};
  if (sw.dual_violations > 0)
    return {false, fmt("dual feasibility: %lld boundary violations, worst %.3e",
                       sw.dual_violations, sw.worst_dual)};
  return {true, fmt("dual feasibility: %lld iteration boundaries, zero violations, worst "
                    "infeasibility %.2e (tol %.0e)",
                    sw.boundaries, sw.worst_dual, Tolerances{}.dual)};
}

// --------------------------------------------------------------- criterion 7

Line task_count_law() {
  long long groups = 0, mismatches = 0, orphans = 0;
  for (const auto& spec : random_models()) {
    CompLp lp = testsupport::make_random_lp(spec);
    SolveOptions o;
    o.workers = 4;
    const Solution sol = solve_pami(lp, o);
    groups += sol.pami_audit.update_groups;
    mismatches += sol.pami_audit.task_count_mismatches;
    orphans += sol.pami_audit.orphan_breaches;
  }
  if (mismatches > 0 || orphans > 0 || groups == 0)
    return {false, fmt("update-group law: %lld groups, %lld task-count mismatches, %lld "
                       "pivot-cap breaches",
                       groups, mismatches, orphans)};
  return {true, fmt("update-group law: %lld deferred groups ran exactly 2t (+1 with flips) "
                    "solves, early-flip pivot cap never breached",
                    groups)};
}

// --------------------------------------------------------------- criterion 8

Line cutoff_direction() {
  const std::vector<unsigned> subset = {2, 8, 15, 16, 17, 29, 36, 38, 43, 48};
  long long loose = 0, tight = 0;
  for (unsigned seed : subset) {
    for (const auto& spec : testsupport::reference_suite()) {
      if (spec.seed != seed) continue;
      CompLp lp = testsupport::make_random_lp(spec);
      SolveOptions o;
      o.workers = 3;
      o.pami.cutoff = 1.001;
      const Solution hi = solve_pami(lp, o);
      o.pami.cutoff = 0.95;
      const Solution lo = solve_pami(lp, o);
      if (hi.status != SolveStatus::kOptimal || lo.status != SolveStatus::kOptimal)
        return {false, "candidate-cutoff direction: subset instance failed to solve"};
      loose += hi.iterations;
      tight += lo.iterations;
    }
  }
  if (loose <= tight)
    return {false, fmt("candidate-cutoff direction: cutoff 1.001 gave %lld iterations vs "
                       "%lld at 0.95 (expected strictly more)",
                       loose, tight)};
  return {true, fmt("candidate-cutoff direction: cutoff 1.001 costs %lld iterations vs %lld "
                    "at 0.95 on the pinned 10-instance subset",
                    loose, tight)};
}

// --------------------------------------------------------------- criterion 9

Line iteration_parity() {
  int within = 0, total = 0;
  double worst_ratio = 1.0;
  for (const auto& spec : random_models()) {
    CompLp lp = testsupport::make_random_lp(spec);
    const Solution ser = solve_serial(lp, SolveOptions{});
    SolveOptions o;
    o.workers = 2;
    const Solution par = solve_pami(lp, o);
    if (ser.status != SolveStatus::kOptimal || par.status != SolveStatus::kOptimal)
      return {false, "iteration parity: " + lp.name + " failed to solve"};
    ++total;
    const double ratio =
        static_cast<double>(par.iterations) / std::max(1.0, static_cast<double>(ser.iterations));
    if (ratio >= 0.5 && ratio <= 1.5) ++within;
    if (std::abs(std::log(ratio)) > std::abs(std::log(worst_ratio))) worst_ratio = ratio;
  }
  const bool pass = within * 10 >= total * 9;
  return {pass, fmt("iteration parity: %d/%d models within [0.5,1.5]x serial iterations "
                    "(>=90%% required), extreme ratio %.2f",
                    within, total, worst_ratio)};
}

// -------------------------------------------------------------- criterion 10

bool curve_equals(const std::vector<ProfilePoint>& got,
                  const std::vector<std::pair<double, double>>& want) {
  if (got.size() != want.size()) return false;
  for (size_t i = 0; i < got.size(); ++i)
    if (got[i].rho != want[i].first || got[i].fraction != want[i].second) return false;
  return true;
}

Line reporting_fixtures() {
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::map<std::string, std::map<std::string, double>> single;
  single["m1"]["only"] = 3.0;
  single["m2"]["only"] = 0.5;
  auto c1 = performance_profile(single);
  if (!curve_equals(c1["only"], {{1.0, 1.0}}))
    return {false, "reporting fixtures: single-engine profile mismatch"};

  std::map<std::string, std::map<std::string, double>> pair;
  pair["m"] = {{"fast", 1.0}, {"slow", 2.0}};
  auto c2 = performance_profile(pair);
  if (!curve_equals(c2["fast"], {{1.0, 1.0}}) ||
      !curve_equals(c2["slow"], {{1.0, 0.0}, {2.0, 1.0}}))
    return {false, "reporting fixtures: two-engine profile mismatch"};

  // Hand-computed: four countable models (m4 unsolved by everyone), ratios
  // e1 {1,2,1,2}, e2 {2,1,1,4}, e3 {4,1,1}, e4 none. Powers of two keep every
  // expected value exactly representable.
  std::map<std::string, std::map<std::string, double>> grid;
  grid["m1"] = {{"e1", 1.0}, {"e2", 2.0}, {"e3", 4.0}, {"e4", inf}};
  grid["m2"] = {{"e1", 2.0}, {"e2", 1.0}, {"e3", 1.0}, {"e4", inf}};
  grid["m3"] = {{"e1", 1.0}, {"e2", 1.0}, {"e3", inf}, {"e4", inf}};
  grid["m4"] = {{"e1", inf}, {"e2", inf}, {"e3", inf}, {"e4", inf}};
  grid["m5"] = {{"e1", 3.0}, {"e2", 6.0}, {"e3", 1.5}, {"e4", inf}};
  auto c3 = performance_profile(grid);
  if (!curve_equals(c3["e1"], {{1.0, 0.5}, {2.0, 1.0}}) ||
      !curve_equals(c3["e2"], {{1.0, 0.5}, {2.0, 0.75}, {4.0, 1.0}}) ||
      !curve_equals(c3["e3"], {{1.0, 0.5}, {4.0, 0.75}}) ||
      !curve_equals(c3["e4"], {{1.0, 0.0}}))
    return {false, "reporting fixtures: three-engine profile mismatch"};

  if (geometric_mean_speedup({{"a", 2.0}, {"b", 3.0}}, {{"a", 2.0}, {"b", 3.0}}) != 1.0)
    return {false, "reporting fixtures: identical-set mean is not exactly one"};
  if (geometric_mean_speedup({}, {}) != 1.0)
    return {false, "reporting fixtures: empty-set mean is not exactly one"};
  const double two = geometric_mean_speedup({{"a", 2.0}, {"b", 2.0}}, {{"a", 1.0}, {"b", 1.0}});
  const double mixed = geometric_mean_speedup({{"a", 1.0}, {"b", 4.0}}, {{"a", 1.0}, {"b", 1.0}});
  const double cancel = geometric_mean_speedup({{"a", 2.0}, {"b", 1.0}}, {{"a", 1.0}, {"b", 2.0}});
  if (std::abs(two - 2.0) > 2.0 * kUlps || std::abs(mixed - 2.0) > 2.0 * kUlps ||
      std::abs(cancel - 1.0) > kUlps)
    return {false, fmt("reporting fixtures: geometric means off (%.17g, %.17g, %.17g)", two,
                       mixed, cancel)};
  bool threw = false;
  try {
    geometric_mean_speedup({{"a", 1.0}}, {{"b", 1.0}});
  } catch (const MismatchedSets&) {
    threw = true;
  }
  if (!threw) return {false, "reporting fixtures: mismatched sets not rejected"};

  return {true, "reporting fixtures: profile step curves exact, geometric means exact to "
                "round-off, mismatched sets rejected"};
}

// -------------------------------------------------------------- criterion 11

Line parallel_smoke() {
  testsupport::RandomLpSpec spec;
  spec.rows = 2000;
  spec.structurals = 600;
  spec.density = 0.05;
  spec.seed = 777;
  CompLp lp = testsupport::make_random_lp(spec);

  auto timed = [&](int workers) {
    double best = std::numeric_limits<double>::infinity();
    long long iters = 0;
    for (int rep = 0; rep < 3; ++rep) {
      SolveOptions o;
      o.workers = workers;
      o.iteration_limit = 500;
      const Solution s = solve_pami(lp, o);
      best = std::min(best, s.wall_seconds);
      iters = s.iterations;
    }
    return std::pair{best, iters};
  };
  const auto [w1, it1] = timed(1);
  const auto [w4, it4] = timed(4);
  const unsigned hw = std::thread::hardware_concurrency();
  return {true, fmt("parallel scaling snapshot (non-gating): m=2000 instance, %lld identical "
                    "iterations; pami1 %.3f s vs pami4 %.3f s (ratio %.2f) on %u hardware "
                    "thread(s); large-scale reference ratios: 1.51 vs a serial baseline, "
                    "2.34 vs one-worker",
                    it1, w1, w4, w1 / w4, hw)};
}

}  // namespace

int main() {
  std::printf("acceptance: 11 criteria, gating tolerances pinned in-source\n");
  int failures = 0;
  int idx = 0;
  auto emit = [&](const Line& line, bool gating = true) {
    ++idx;
    const char* tag = gating ? (line.pass ? "PASS" : "FAIL") : "REPORT";
    std::printf("%2d %-6s %s\n", idx, tag, line.text.c_str());
    std::fflush(stdout);
    if (gating && !line.pass) ++failures;
  };

  emit(oracle_correctness());
  emit(worker_determinism());
  emit(combined_flip_identity());
  emit(scheme_equivalence());
  const BoundarySweep sweep = boundary_sweep();
  emit(weight_fidelity(sweep));
  emit(dual_feasibility(sweep));
  emit(task_count_law());
  emit(cutoff_direction());
  emit(iteration_parity());
  emit(reporting_fixtures());
  emit(parallel_smoke(), /*gating=*/false);

  std::printf("acceptance: %d/10 gating criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
