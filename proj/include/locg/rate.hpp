#pragma once

#include <optional>
#include <vector>

#include "locg/eig.hpp"
#include "locg/linalg.hpp"

// Executable form of the paper's convergence-rate theory: Chebyshev bounds,
// the chi/omega/chi1 rate functions, and the sigma/gamma diagnostics
// computed from solver iterates, including the block-case gamma_{k,(1)}.

namespace locg::rate {

// Chebyshev polynomial of the first kind evaluated outside [-1, 1],
// via the numerically stable hyperbolic form cosh(m*acosh|t|).
double chebyshev_T(int m, double t);

// C_{m_e} = T_{m_e}(1/Delta)^{-2}; returns 0 for kappa == 1 (two-point
// spectrum: one extended-steepest-descent sweep is exact).
double bound_C(const SpectralSummary& summary, int m_e);

// chi(sigma, C): the (1+m_h)-step asymptotic rate function, computed via the
// cancellation-safe form C^2 / (1 + (1-C)(2*sigma - 1 + 2*sqrt(sigma*(sigma+C)))).
double chi(double sigma, double C);
// The paper's primary closed form, kept for cross-checks.
double chi_primary_form(double sigma, double C);

// omega(sigma, C): the one-step rate function, via C / (1 + (1-C)*sqrt(sigma/(sigma+C))).
double omega(double sigma, double C);
double omega_primary_form(double sigma, double C);

// chi_1(C) = chi(1,C)^floor((1+m_h)/2) * C^((1+m_h) - 2*floor((1+m_h)/2)).
double chi1(double C, int m_h);

// gamma_j = (r_{k-j} - r_{k-j+1})^H r_k / ||r_k||^2 for j = 1..m.
// `residuals` is newest first: residuals[0] = r_k, residuals[1] = r_{k-1}, ...
// Only as many gammas as the available history depth are produced.
std::vector<double> gamma_history(const std::vector<Vector>& residuals);

// Same with q_k replacing r_k in the numerator (extended-subspace variant).
std::vector<double> gamma_tilde_history(const std::vector<Vector>& residuals,
                                        const Vector& q);

// sigma = (1 + |gamma_2| + ... + |gamma_{m_h}|)^2; gamma_1 (theoretical value
// -1) is excluded by the formula.
double sigma_scalar(const std::vector<double>& gammas);

enum class SigmaVariant { ScalarHistory, ExtendedHistory, BlockFirstColumn };

struct SigmaDiagnostic {
  int iter = -1;
  SigmaVariant variant = SigmaVariant::ScalarHistory;
  bool available = false;
  std::vector<double> gammas;  // scalar variants
  double sigma = 1.0;
  // Block-variant extras (n_b >= 2, m_e = 1, m_h = 1):
  double gamma_sq_full = 0;    // eq. (gamma:m11)
  double gamma_sq_shrink = 0;  // eq. (gamma:m11:shrink) -- the headline value
  double tau_sq = 0;
  double h_over_sqrt_delta = 0;  // ||h_k|| / sqrt(delta_{k-1,(1)})
  bool M_positive_definite = false;
  bool R_perp_rank_deficient = false;
  bool theory_precondition_violated = false;  // tau^2 outside [0,1) or M not PD
};

// Inputs for the first-column block diagnostic of a LOCG(n_b,1,1) step.
// AR must be the exact image A*R (available for free in the K = I iteration
// from the Krylov chain).
struct BlockGammaInput {
  Matrix X;        // X_k (orthonormal, n x n_b)
  Matrix X_prev;   // X_{k-1}
  Matrix R;        // r(X_k)
  Matrix AR;       // A * R
  Vector rho;      // rho_k (ascending)
  Vector rho_prev; // rho_{k-1}
  double rho_next_1 = 0;  // rho_{k+1,(1)}
  int iter = -1;
};

SigmaDiagnostic block_gamma_first(const BlockGammaInput& in);

// Per-iteration rate report over the last 50% of a trace (paper Figs. 1-3
// right panels): one-step ratios against sqrt(chi(sigma_k, C)) and the
// (1+m_h)-step ratio against min{chi(sigma,C), chi_1(C)}.  Iterations whose
// error sits below the roundoff floor 1e2*eps*|lambda_1| are excluded.
struct RateRow {
  int iter = 0;
  double eps = 0;            // rho_k - lambda_1
  double step_ratio = 0;     // eps_k / eps_{k-1}
  double step_bound = 0;     // sqrt(chi(sigma_k, C)), or C itself when m_h = 0
  double ratio_vs_bound = 0; // step_ratio / step_bound
  double sigma = 1.0;
  bool multi_available = false;
  double multi_ratio = 0;    // eps_k / eps_{k-1-m_h}
  double multi_bound = 0;    // min{chi(sigma,C), chi_1(C)} (or C^... for m_h=0)
};

struct RateReport {
  double C_cheb = 0;
  int m_e = 1;
  int m_h = 1;
  std::vector<RateRow> rows;
};

// eps_by_iter / sigma_by_iter are full-length per-iteration series
// (sigma entries < 1 are treated as sigma = 1).
RateReport rate_report(const std::vector<double>& eps_by_iter,
                       const std::vector<double>& sigma_by_iter,
                       const SpectralSummary& summary, int m_e, int m_h);

}  // namespace locg::rate
