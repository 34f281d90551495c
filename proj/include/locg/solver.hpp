#pragma once

#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "locg/linalg.hpp"
#include "locg/rate.hpp"

// The LOCG(n_b, m_e, m_h) iteration engine: search-subspace construction,
// Rayleigh-Ritz, soft locking, history management, stopping, and per-
// iteration trace emission (including the gamma/sigma rate diagnostics).

namespace locg {

enum class Outcome { Stagnation, ResidualConverged, MaxIter, Breakdown };
const char* outcome_name(Outcome o);

struct Preconditioner {
  bool identity = true;
  std::function<Matrix(const Matrix&)> apply;

  static Preconditioner Identity() { return {}; }
  // K = diag(1/|a_ii|): positive definite for any nonzero diagonal.
  static Preconditioner Jacobi(const Vector& diagA);
  static Preconditioner Operator(std::function<Matrix(const Matrix&)> f);
};

struct SolverConfig {
  int n_b = 1;
  int m_e = 1;
  int m_h = 1;
  int max_iter = 1000;
  double stop_rel = 1e-15;      // stagnation: rho_{k-1}-rho_k < stop_rel*|rho_k|
  double res_tol_rel = 1e-12;   // secondary stop: ||r|| <= res_tol_rel*a_scale
  double drop_tol = 1e-10;
  double breakdown_tol = 1e-8;  // projected-matrix asymmetry => "nonreal Ritz"
  bool lock_converged = true;
  double a_scale = 0;           // <= 0: estimated by power iteration at init
  bool diagnostics = true;      // gamma/sigma tracking
};

struct IterationRecord {
  int iter = 0;
  Vector ritz;      // all n_b values (locked columns merged in)
  Vector resnorms;  // all n_b
  Vector errs_rel;  // (ritz - lambda_1)/|lambda_1|; empty without a reference
  std::vector<double> gammas;  // gamma_j (j = 1..), scalar variants
  double gamma1 = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  bool sigma_is_tilde = false;
  rate::SigmaDiagnostic block;  // block first-column diagnostic (see .available)
  int subspace_dim = 0;
  int n_locked = 0;
  bool newly_locked = false;
  double asym = 0;
  long ops = 0;           // operator applications in this iteration
  double wall_time = 0;   // seconds spent in this iteration
};

struct ConvergenceTrace {
  std::vector<IterationRecord> records;
};

// Raw step data handed to the line-search oracle: X_plus was obtained by
// Rayleigh-Ritz over span[X, V, W] (+ locked deflation), with V^H r(X) != 0
// and W^H r(X) = 0.
struct StepWitness {
  int iter = 0;
  int n_b = 1;
  Matrix X;
  Matrix V;
  Matrix W;  // may have zero columns (SD step)
  Matrix X_plus;
  bool newly_locked = false;
};
using WitnessCallback = std::function<void(const StepWitness&)>;

struct SolverState {
  int iter = 0;
  Matrix X, AX, R;  // unlocked columns
  Vector rho;
  Vector prev_rho;  // rho of the previous iterate (empty at iteration 0)
  std::deque<std::pair<Matrix, Matrix>> history;  // (X_old, A X_old), newest first
  std::deque<Vector> rhist;                       // past residuals (n_b = 1), newest first
  Matrix locked_X, locked_AX;
  std::vector<double> locked_vals, locked_resnorms;
  long ops = 0;        // operator applications inside iterations
  long ops_setup = 0;  // init applications (A X_0, norm estimate)
  double a_scale = 1.0;
  bool monotonicity_violated = false;
};

enum class StepStatus { Continue, Stagnation, ResidualConverged, Breakdown };

struct RitzDecomposition {
  Vector values;   // n_b smallest, ascending
  Matrix vectors;  // Z * Y, orthonormal
};

// Standalone Rayleigh-Ritz (test/diagnostic use; applies A to Z itself).
// Throws "nonreal Ritz values" when the projected matrix is asymmetric
// beyond breakdown_tol * max(1, a_scale).
RitzDecomposition rayleigh_ritz(const HermitianOperator& A, const Matrix& Z,
                                int n_b, double breakdown_tol = 1e-8,
                                double a_scale = 1.0);

struct Subspace {
  Matrix Z, AZ;
};

// Orthonormal basis of K_{m_e}(KA, X_k) + span[X_{k-1},...,X_{k-m_h}],
// deflated against locked columns, with A-images carried along.
// Costs exactly m_e * (unlocked columns) operator applications.
Subspace build_search_subspace(const HermitianOperator& A, const Preconditioner& K,
                               SolverState& st, const SolverConfig& cfg);

SolverState locg_init(const HermitianOperator& A, const Preconditioner& K,
                      const Matrix& X0, const SolverConfig& cfg);

StepStatus locg_step(const HermitianOperator& A, const Preconditioner& K,
                     SolverState& st, const SolverConfig& cfg,
                     IterationRecord& rec, const double* lambda1_ref = nullptr,
                     const WitnessCallback& witness = {});

struct SolveResult {
  Outcome outcome = Outcome::MaxIter;
  int iters = 0;
  int breakdown_iter = -1;
  Vector ritz;
  Matrix X;
  ConvergenceTrace trace;
  long ops_total = 0;
  long ops_setup = 0;
  bool monotonicity_violated = false;
};

SolveResult locg_solve(const HermitianOperator& A, const Preconditioner& K,
                       const Matrix& X0, const SolverConfig& cfg,
                       const double* lambda1_ref = nullptr,
                       const WitnessCallback& witness = {});

}  // namespace locg
