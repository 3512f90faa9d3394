// Command-line solver and benchmark harness.
//
// Solve mode: run one engine over a single MPS file (--mps) or every *.mps in
// a directory (--dir), reporting one RunReport per model as text, CSV, or
// JSON. Optional pivot logging for determinism diffs.
//
// Analysis mode: --profile reads previously written run CSVs and emits
// per-engine performance-profile step points; --speedup compares two run CSVs
// by geometric-mean speedup.
//
// Exit codes: 0 optimal, 2 usage, 3 unbounded dual / infeasible primal,
// 4 iteration or time limit, 5 numerical failure, 6 file or parse error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "duplex/duplex.hpp"

namespace {

int status_exit_code(duplex::SolveStatus st) {
  switch (st) {
    case duplex::SolveStatus::kOptimal: return 0;
    case duplex::SolveStatus::kDualUnbounded: return 3;
    case duplex::SolveStatus::kIterationLimit:
    case duplex::SolveStatus::kTimeLimit: return 4;
    case duplex::SolveStatus::kNumericalFailure: return 5;
  }
  return 5;
}

duplex::Solution run_engine(const std::string& engine, const duplex::CompLp& lp,
                            const duplex::SolveOptions& opts) {
  if (engine == "serial") return duplex::solve_serial(lp, opts);
  if (engine == "pami") return duplex::solve_pami(lp, opts);
  return duplex::solve_sip(lp, opts);
}

std::string text_report(const duplex::RunReport& r) {
  std::ostringstream os;
  os << "model:      " << r.model << "\n"
     << "engine:     " << r.engine << " (workers " << r.workers << ")\n"
     << "status:     " << duplex::status_name(r.status) << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "objective:  %.10g\n", r.objective);
  os << buf;
  std::snprintf(buf, sizeof buf, "iterations: %lld\n", r.iterations);
  os << buf;
  std::snprintf(buf, sizeof buf, "wall:       %.6f s\n", r.wall_s);
  os << buf;
  double total = 0.0;
  for (double c : r.comp) total += c;
  os << "components (% of measured time):\n";
  for (int c = 0; c < static_cast<int>(duplex::Comp::kCount); ++c) {
    double pct = total > 0 ? 100.0 * r.comp[c] / total : 0.0;
    std::snprintf(buf, sizeof buf, "  %-14s %8.4f s  %5.1f%%\n",
                  duplex::comp_name(static_cast<duplex::Comp>(c)), r.comp[c], pct);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "hyper-sparse results: ftran %.1f%%, btran %.1f%% -> %s\n",
                r.ftran_hs_pct, r.btran_hs_pct,
                duplex::is_hyper_sparse_model(r.ftran_hs_pct, r.btran_hs_pct)
                    ? "hyper-sparse"
                    : "not hyper-sparse");
  os << buf;
  return os.str();
}

// Minimal reader for our own run CSVs: model, engine, status, wall seconds.
struct CsvRun {
  std::string model, engine, status;
  double wall = 0.0;
};

std::vector<CsvRun> read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw duplex::Error("cannot open " + path);
  std::vector<CsvRun> runs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      if (!cells.empty() && cells[0] == "model") continue;  // header row
    }
    if (cells.size() < 7) throw duplex::Error(path + ": malformed run row: " + line);
    runs.push_back({cells[0], cells[1], cells[3], std::stod(cells[6])});
  }
  return runs;
}

int run_profile(const std::vector<std::string>& paths) {
  std::map<std::string, std::map<std::string, double>> times;
  for (const auto& p : paths)
    for (const auto& r : read_run_csv(p)) {
      double t = (r.status == "optimal") ? r.wall
                                         : std::numeric_limits<double>::infinity();
      times[r.model][r.engine] = t;
    }
  auto curves = duplex::performance_profile(times);
  std::printf("engine,rho,fraction\n");
  for (auto& [engine, pts] : curves)
    for (auto& pt : pts)
      std::printf("%s,%.10g,%.10g\n", engine.c_str(), pt.rho, pt.fraction);
  return 0;
}

int run_speedup(const std::string& base_path, const std::string& test_path) {
  std::map<std::string, double> base, test;
  for (const auto& r : read_run_csv(base_path)) base[r.model] = r.wall;
  for (const auto& r : read_run_csv(test_path)) test[r.model] = r.wall;
  std::printf("geometric_mean_speedup,%.10g\n",
              duplex::geometric_mean_speedup(base, test));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel dual revised simplex solver"};
  app.get_formatter()->column_width(28);

  std::string engine = "serial";
  std::string mps_file, dir, report = "text", pivot_log_path, out_path;
  int workers = 1;
  int s = 8;
  double cutoff = 0.95;
  double density_revert = 0.10;
  std::string scheme = "ft";
  long long iter_limit = -1;
  double time_limit = -1.0;
  unsigned seed = 0;
  std::vector<std::string> profile_paths;
  std::vector<std::string> speedup_paths;

  app.add_option("--engine", engine, "Solver engine")
      ->check(CLI::IsMember({"serial", "pami", "sip"}));
  app.add_option("--workers", workers, "Worker thread count")->check(CLI::PositiveNumber);
  app.add_option("--s", s, "Candidate rows per major iteration (pami)")
      ->check(CLI::PositiveNumber);
  app.add_option("--cutoff", cutoff, "Minor-iteration attractiveness cutoff (pami)");
  app.add_option("--density-revert", density_revert,
                 "Density above which vector updates go parallel/dense");
  app.add_option("--scheme", scheme, "Basis update scheme")
      ->check(CLI::IsMember({"ft", "pf", "apf"}));
  auto* mps_opt = app.add_option("--mps", mps_file, "Solve a single MPS file");
  auto* dir_opt = app.add_option("--dir", dir, "Solve every *.mps file in a directory");
  app.add_option("--iter-limit", iter_limit, "Iteration limit");
  app.add_option("--time-limit", time_limit, "Time limit in seconds");
  app.add_option("--report", report, "Report format")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option("--pivot-log", pivot_log_path, "Write the pivot log to this file");
  app.add_option("--seed", seed, "Seed for pricing permutation and perturbations");
  app.add_option("--out", out_path, "Write the report here instead of stdout");
  auto* profile_opt =
      app.add_option("--profile", profile_paths,
                     "Emit performance-profile points from run CSVs, then exit");
  auto* speedup_opt =
      app.add_option("--speedup", speedup_paths,
                     "BASE TEST: geometric-mean speedup of two run CSVs, then exit")
          ->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!profile_paths.empty()) return run_profile(profile_paths);
    if (!speedup_paths.empty()) return run_speedup(speedup_paths[0], speedup_paths[1]);
    (void)profile_opt;
    (void)speedup_opt;

    if (mps_opt->count() == 0 && dir_opt->count() == 0) {
      std::cerr << "error: one of --mps or --dir is required\n";
      return 2;
    }
    if (mps_opt->count() > 0 && dir_opt->count() > 0) {
      std::cerr << "error: --mps and --dir are mutually exclusive\n";
      return 2;
    }

    std::vector<std::string> models;
    if (!mps_file.empty()) {
      models.push_back(mps_file);
    } else {
      if (!std::filesystem::is_directory(dir)) {
        std::cerr << "error: not a directory: " << dir << "\n";
        return 6;
      }
      for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".mps")
          models.push_back(entry.path().string());
      std::sort(models.begin(), models.end());
      if (models.empty()) {
        std::cerr << "error: no .mps files in " << dir << "\n";
        return 6;
      }
    }

    duplex::SolveOptions opts;
    opts.workers = workers;
    opts.iteration_limit = iter_limit;
    opts.time_limit = time_limit;
    opts.seed = seed;
    opts.pami.s = s;
    opts.pami.cutoff = cutoff;
    opts.pami.density_revert = density_revert;
    if (scheme == "pf") opts.scheme = duplex::UpdateScheme::kPf;
    if (scheme == "apf") opts.scheme = duplex::UpdateScheme::kApf;

    std::ofstream out_file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      out_file.open(out_path);
      if (!out_file) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 6;
      }
      out = &out_file;
    }
    std::ofstream pivot_out;
    if (!pivot_log_path.empty()) {
      pivot_out.open(pivot_log_path);
      if (!pivot_out) {
        std::cerr << "error: cannot write " << pivot_log_path << "\n";
        return 6;
      }
    }

    int exit_code = 0;
    bool csv_header_done = false;
    nlohmann::json json_reports = nlohmann::json::array();
    for (const auto& path : models) {
      duplex::CompLp lp = duplex::load_mps(path);
      duplex::Solution sol = run_engine(engine, lp, opts);
      std::string name = std::filesystem::path(path).stem().string();
      auto rep = duplex::RunReport::from(name, engine, workers, sol);

      if (report == "csv") {
        if (!csv_header_done) {
          *out << duplex::csv_header() << "\n";
          csv_header_done = true;
        }
        *out << duplex::csv_row(rep) << "\n";
      } else if (report == "json") {
        json_reports.push_back(duplex::to_json(rep));
      } else {
        *out << text_report(rep);
        for (const auto& w : sol.warnings) *out << "warning: " << w << "\n";
        if (models.size() > 1) *out << "\n";
      }
      if (pivot_out.is_open()) {
        pivot_out << "# model=" << name << "\n" << sol.pivot_log;
      }
      int rc = status_exit_code(sol.status);
      if (rc != 0 && exit_code == 0) exit_code = rc;
    }
    if (report == "json")
      *out << (json_reports.size() == 1 ? json_reports[0] : json_reports).dump(2) << "\n";
    return exit_code;
  } catch (const duplex::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 6;
  } catch (const duplex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  }
}
