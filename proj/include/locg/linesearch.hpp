#pragma once

#include <array>
#include <limits>

#include "locg/linalg.hpp"
#include "locg/solver.hpp"

// Per-iteration verification of the exact line-search identities: the vector
// case (five identities relating alpha_+, b_+, d, rho and the check matrix
// F-check(x) = (I-P)F(rho(x_+))(I-P)), and the block analogue built on
// rho~(X) = (X^H X)^{-1} X^H A X,  r~(X) = A X - X rho~(X),
// L_X(Y) = A Y - Y rho~(X),  L_{X;T}(Z) = T^H A T Z - T^H T Z rho~(X).
// The identities hold exactly for the unnormalized residual r~; all checks
// below use that form.

namespace locg {

struct LineSearchWitness {
  Vector x;       // ||x|| = 1
  Vector v;       // gradient-direction vector, v^H r(x) != 0
  Matrix W;       // auxiliary block with W^H r(x) = 0 (may have 0 columns)
  Vector x_plus;  // scaled so that x^H x_plus = x^H x (hence x^H d = 0)
  Vector d;       // x_plus - x
  double alpha_plus = 0;
  Vector b_plus;
  double rho_x = 0, rho_plus = 0;
  // Conditioning of the extraction: 1/||d||, |rho_+|/|delta| and the
  // condition number of W^H F-check W, whichever is largest.  Identity
  // residuals are meaningful only while this stays below ~1e12.
  double condition = 0;
};

// Build a witness from a solver step: scales x_plus_raw so x^H d = 0, then
// extracts (alpha_+, b_+) by least squares in the basis [(I-P)v, (I-P)W].
LineSearchWitness make_vector_witness(const HermitianOperator& A, const Vector& x,
                                      const Vector& v, const Matrix& W,
                                      const Vector& x_plus_raw);

struct IdentityReport {
  // Relative residuals of identities (a)..(e); NaN where not checkable.
  std::array<double, 5> residuals{};
  bool e_checkable = true;
  // All checkable residuals <= max(tol, 32*eps*condition): identities are
  // exact in exact arithmetic, but floating point can only confirm them to
  // roughly eps times the extraction's condition number.
  bool pass = false;
  double condition = 0;
};

IdentityReport verify_vector_identities(const HermitianOperator& A,
                                        const LineSearchWitness& w, double tol);

struct BlockLineSearchWitness {
  Matrix X;  // orthonormal
  Matrix V;  // V^H r(X) nonsingular
  Matrix W;  // W^H r(X) = 0 (may have 0 columns)
  Matrix X_plus;
  Matrix D;       // X_plus - X, X^H D = 0
  Matrix a_plus;  // V.cols x n_b
  Matrix b_plus;  // W.cols x n_b
  double condition = 0;
};

BlockLineSearchWitness make_block_witness(const HermitianOperator& A,
                                          const Matrix& X, const Matrix& V,
                                          const Matrix& W, const Matrix& X_plus_raw);

IdentityReport verify_block_identities(const HermitianOperator& A,
                                       const BlockLineSearchWitness& w, double tol);

// Central finite difference of tr rho(X + tE) at t = 0 against the gradient
// form 2 Re<E, r(X)(X^H X)^{-1/2}>; returns the relative mismatch.
double gradient_fd_residual(const HermitianOperator& A, const Matrix& X,
                            const Matrix& E, double h = 1e-5);

// Convenience: verify a StepWitness emitted by the solver; picks the vector
// or block path by n_b.
IdentityReport verify_step_witness(const HermitianOperator& A,
                                   const StepWitness& w, double tol);

}  // namespace locg
