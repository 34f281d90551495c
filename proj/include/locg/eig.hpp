#pragma once

#include <utility>
#include <vector>

#include "locg/linalg.hpp"

// Ground-truth spectra: dense Hermitian eigendecomposition for reference
// values, the analytic 2D Laplacian spectrum, and the spectral summary
// (kappa, Delta) that feeds the convergence-rate bounds.

namespace locg {

struct SpectralSummary {
  double lambda_1 = 0;
  double lambda_2 = 0;
  double lambda_n = 0;
  double kappa = 1;   // (lambda_n - lambda_1) / (lambda_2 - lambda_1)
  double delta = 0;   // (kappa - 1) / (kappa + 1)
};

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

// Dense symmetric eigendecomposition (reference oracle).  Rejects
// non-Hermitian input (asymmetry above 1e-12 relative to the matrix scale).
EigenDecomposition dense_eigh(const Matrix& A);

// Spectrum of the N x N five-point Laplacian (zero Dirichlet boundary):
// the n = N^2 values -4 + 2cos(i*pi/(N+1)) + 2cos(j*pi/(N+1)), ascending.
Vector laplacian2d_spectrum(int N);

// kappa/Delta from an ascending spectrum.  lambda_2 is the smallest value
// strictly above lambda_1 + 1e-12*spread; a degenerate smallest eigenvalue
// (no such value, or gap below 1e-14*spread) is rejected.
SpectralSummary spectral_summary(const Vector& ascending_values);

// Symmetric positive definite square root (used by the preconditioner
// equivalence check, which needs a dense K^{1/2}).
Matrix matrix_sqrt_spd(const Matrix& A);

}  // namespace locg
