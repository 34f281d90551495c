#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locg/problems.hpp"
#include "locg/rate.hpp"
#include "locg/solver.hpp"

// Benchmark harness plumbing shared by the CLI and the tests: deterministic
// CSV traces (17 significant digits), JSON run summaries, Table-2-style
// sigma statistics, per-iteration rate reports and three-panel SVG plots.
// Wall-clock data goes to a sibling timing CSV so the main trace stays
// byte-for-byte reproducible.

namespace locg::bench {

struct Triple {
  int nb = 1, me = 1, mh = 1;
};

struct Manifest {
  std::string problem = "outlier_cluster";
  int N = 50;               // laplacian2d grid
  Eigen::Index n = 1000;    // synthetic problem size
  std::string matrix_path;  // Matrix Market file
  std::vector<Triple> triples;
  int trials = 1;
  std::uint64_t seed0 = 1;
  int max_iter = 0;  // 0 => problem default (3000, or 500 for outlier_cluster)
  double stop_rel = 1e-15;
  std::string precond = "identity";  // identity | jacobi
  std::string out_dir = ".";
};

// Deterministic problem instances: the Haar conjugation seed of the two
// synthetic problems is fixed (trial seeds only vary the starts).
problems::Problem make_problem(const Manifest& m);
int default_max_iter(const std::string& problem);

// The paper's 13 tested triples.
std::vector<Triple> paper13();

struct TrialFiles {
  std::string trace, rate, timing, summary;
};

struct TrialRun {
  Triple triple;
  std::uint64_t seed = 0;
  SolveResult result;
};

// One solve with the manifest's settings.
TrialRun run_trial(const problems::Problem& p, const Manifest& m, Triple t,
                   std::uint64_t seed);

// Serialize one trial to out_dir; returns the file names.
TrialFiles write_trial(const problems::Problem& p, const Manifest& m,
                       const TrialRun& run);

// Full sweep (trials x triples), parallelized up to the LOCG_THREADS env cap.
// Returns all produced files; `had_breakdown` reports whether any trial ended
// in breakdown (the CLI exit code contract).
std::vector<TrialFiles> run_manifest(const Manifest& m, bool* had_breakdown);

// ---- sigma table -----------------------------------------------------------
struct SigmaRow {
  Triple triple;
  std::uint64_t seed = 0;
  bool insufficient = false;
  double min_sm1 = 0, mean_sm1 = 0, max_sm1 = 0;  // sigma - 1 over last 50%
};
// sigma-1 statistics over the last 50% iterations of a trace.
SigmaRow sigma_stats(const TrialRun& run);
std::string render_sigma_table(const std::string& problem,
                               const std::vector<SigmaRow>& rows);

// ---- trace parsing & plotting ---------------------------------------------
struct TraceRow {
  int iter = 0;
  double rho_1 = 0, resnorm_1 = 0, err_rel_1 = 0, sigma = 0, ratio_two_step = 0,
         ratio_vs_bound = 0;
  bool has_err = false, has_sigma = false, has_two_step = false, has_bound = false;
};
std::vector<TraceRow> parse_trace_csv(const std::string& path);
std::vector<double> parse_timing_csv(const std::string& path);  // cumulative seconds

// Three-panel SVG: (iteration, log10 err), (time, log10 err), (iteration,
// ratio-vs-bound over the last 50% with a guide line at 1).
void write_convergence_svg(const std::string& path, const std::vector<TraceRow>& rows,
                           const std::vector<double>& cumtime,
                           const std::string& title, int breakdown_iter = -1);

// ---- per-trial derived series ---------------------------------------------
// eps_k = rho_{k,(1)} - lambda_1 and the per-iteration sigma series (NaN when
// unavailable) straight from a solve trace.
std::vector<double> eps_series(const SolveResult& r, double lambda1);
std::vector<double> sigma_series(const SolveResult& r, const Triple& t);

std::string format_double(double v);  // %.17g

}  // namespace locg::bench
