#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "duplex/dual_core.hpp"
#include "duplex/errors.hpp"
#include "duplex/timing.hpp"

namespace duplex {

// One solve, flattened for reporting: status, objective, iteration count,
// wall time, the fourteen component times, and the hyper-sparse result rates.
struct RunReport {
  std::string model;
  std::string engine;
  int workers = 1;
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0.0;
  long long iterations = 0;
  double wall_s = 0.0;
  double comp[static_cast<int>(Comp::kCount)] = {};
  double ftran_hs_pct = 0.0;
  double btran_hs_pct = 0.0;

  static RunReport from(const std::string& model, const std::string& engine, int workers,
                        const Solution& sol) {
    RunReport r;
    r.model = model;
    r.engine = engine;
    r.workers = workers;
    r.status = sol.status;
    r.objective = sol.objective;
    r.iterations = sol.iterations;
    r.wall_s = sol.wall_seconds;
    for (int c = 0; c < static_cast<int>(Comp::kCount); ++c)
      r.comp[c] = sol.clock.secs[c];
    r.ftran_hs_pct = sol.ftran_hyper_pct();
    r.btran_hs_pct = sol.btran_hyper_pct();
    return r;
  }
};

inline std::string csv_header() {
  std::string h = "model,engine,workers,status,objective,iters,wall_s";
  for (int c = 0; c < static_cast<int>(Comp::kCount); ++c) {
    h += ',';
    h += comp_csv_name(static_cast<Comp>(c));
  }
  h += ",ftran_hs_pct,btran_hs_pct";
  return h;
}

inline std::string csv_row(const RunReport& r) {
  char buf[256];
  std::string out = r.model + ',' + r.engine + ',' + std::to_string(r.workers) + ',' +
                    status_name(r.status);
  std::snprintf(buf, sizeof buf, ",%.10g,%lld,%.6f", r.objective, r.iterations, r.wall_s);
  out += buf;
  for (int c = 0; c < static_cast<int>(Comp::kCount); ++c) {
    std::snprintf(buf, sizeof buf, ",%.6f", r.comp[c]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, ",%.2f,%.2f", r.ftran_hs_pct, r.btran_hs_pct);
  out += buf;
  return out;
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["model"] = r.model;
  j["engine"] = r.engine;
  j["workers"] = r.workers;
  j["status"] = status_name(r.status);
  j["objective"] = r.objective;
  j["iters"] = r.iterations;
  j["wall_s"] = r.wall_s;
  nlohmann::json comps;
  for (int c = 0; c < static_cast<int>(Comp::kCount); ++c)
    comps[comp_csv_name(static_cast<Comp>(c))] = r.comp[c];
  j["components"] = comps;
  j["ftran_hs_pct"] = r.ftran_hs_pct;
  j["btran_hs_pct"] = r.btran_hs_pct;
  return j;
}

// A model counts as hyper-sparse when most forward or most backward solve
// results stay below one-tenth density.
inline bool is_hyper_sparse_model(double ftran_pct, double btran_pct) {
  return ftran_pct > 60.0 || btran_pct > 60.0;
}

// Step curve of one engine in a performance profile: fraction of models
// solved within a factor rho of the per-model best.
struct ProfilePoint {
  double rho = 1.0;
  double fraction = 0.0;
};

// `times[model][engine]` in seconds; failures as +infinity. Each curve is a
// nondecreasing step function anchored at rho = 1 (the anchor is implicit
// when the engine already has a step there).
inline std::map<std::string, std::vector<ProfilePoint>> performance_profile(
    const std::map<std::string, std::map<std::string, double>>& times) {
  std::map<std::string, std::vector<double>> ratios;  // engine -> finite ratios
  int num_models = 0;
  for (auto& [model, row] : times) {
    (void)model;
    double best = std::numeric_limits<double>::infinity();
    for (auto& [engine, t] : row) {
      ratios.try_emplace(engine);
      best = std::min(best, t);
    }
    if (!std::isfinite(best)) continue;  // nobody solved it
    ++num_models;
    for (auto& [engine, t] : row)
      if (std::isfinite(t)) ratios[engine].push_back(t / best);
  }
  std::map<std::string, std::vector<ProfilePoint>> curves;
  for (auto& [engine, rr] : ratios) {
    auto& curve = curves[engine];
    std::sort(rr.begin(), rr.end());
    if (num_models == 0) {
      curve.push_back({1.0, 0.0});
      continue;
    }
    if (rr.empty() || rr.front() > 1.0) curve.push_back({1.0, 0.0});
    size_t i = 0;
    while (i < rr.size()) {
      size_t j = i;
      while (j < rr.size() && rr[j] == rr[i]) ++j;
      curve.push_back({rr[i], static_cast<double>(j) / num_models});
      i = j;
    }
  }
  return curves;
}

// exp(mean(ln(base/test))) over exactly matching model sets.
inline double geometric_mean_speedup(const std::map<std::string, double>& base,
                                     const std::map<std::string, double>& test) {
  if (base.size() != test.size())
    throw MismatchedSets("speedup sets differ in size");
  double acc = 0.0;
  for (auto& [model, tb] : base) {
    auto it = test.find(model);
    if (it == test.end()) throw MismatchedSets("model missing from test set: " + model);
    acc += std::log(tb / it->second);
  }
  if (base.empty()) return 1.0;
  return std::exp(acc / static_cast<double>(base.size()));
}

}  // namespace duplex
